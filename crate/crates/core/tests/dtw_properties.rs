use approx::assert_relative_eq;
use l1ds_core::dtw::{dtw_distance, dtw_path, path_cost, DtwParams};
use l1ds_core::selector::{select_target, SelectorConfig, SelectorState};
use l1ds_core::StateVec;
use proptest::prelude::*;

fn seq(max_len: usize) -> impl Strategy<Value = Vec<StateVec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2), 1..=max_len)
        .prop_map(|v| v.into_iter().map(StateVec::new).collect())
}

// plain O(MN) table without any of the library's buffer reuse or banding
fn reference_dtw(a: &[StateVec<f64>], b: &[StateVec<f64>]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let mut d = vec![vec![f64::INFINITY; n + 1]; m + 1];
    d[0][0] = 0.0;
    for i in 1..=m {
        for j in 1..=n {
            let c = a[i - 1].distance(&b[j - 1]);
            d[i][j] = c + d[i - 1][j].min(d[i][j - 1]).min(d[i - 1][j - 1]);
        }
    }
    d[m][n]
}

proptest! {
    #[test]
    fn matches_reference_table(a in seq(30), b in seq(30)) {
        let got = dtw_distance(&a, &b, DtwParams::unbanded()).unwrap();
        assert_relative_eq!(got, reference_dtw(&a, &b), max_relative = 1e-12);
    }

    #[test]
    fn symmetric(a in seq(25), b in seq(25)) {
        let ab = dtw_distance(&a, &b, DtwParams::unbanded()).unwrap();
        let ba = dtw_distance(&b, &a, DtwParams::unbanded()).unwrap();
        assert_relative_eq!(ab, ba, max_relative = 1e-12);
    }

    #[test]
    fn self_distance_zero(a in seq(40)) {
        prop_assert_eq!(dtw_distance(&a, &a, DtwParams::unbanded()).unwrap(), 0.0);
    }

    #[test]
    fn band_only_restricts(a in seq(25), b in seq(25), w in 0usize..30) {
        let free = dtw_distance(&a, &b, DtwParams::unbanded()).unwrap();
        match dtw_distance(&a, &b, DtwParams::banded(w)) {
            Ok(banded) => prop_assert!(banded >= free - 1e-12),
            Err(_) => prop_assert!(a.len().abs_diff(b.len()) > w),
        }
        let wide = a.len().max(b.len());
        let same = dtw_distance(&a, &b, DtwParams::banded(wide)).unwrap();
        assert_relative_eq!(same, free, max_relative = 1e-12);
    }

    #[test]
    fn path_is_monotone_and_attains_distance(a in seq(25), b in seq(25)) {
        let path = dtw_path(&a, &b, DtwParams::unbanded()).unwrap();
        let dist = dtw_distance(&a, &b, DtwParams::unbanded()).unwrap();
        prop_assert_eq!(path[0], (0, 0));
        prop_assert_eq!(*path.last().unwrap(), (a.len() - 1, b.len() - 1));
        for w in path.windows(2) {
            let (di, dj) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            prop_assert!(di <= 1 && dj <= 1 && di + dj >= 1);
        }
        assert_relative_eq!(path_cost(&a, &b, &path), dist, max_relative = 1e-12);
    }

    #[test]
    fn selector_stays_in_forward_window(
        target in seq(80),
        history in seq(12),
        k_prev in 0usize..100,
        w in 1usize..20,
        hp in 1usize..15,
    ) {
        let cfg = SelectorConfig { window_w: w, history_h: 10, target_history: hp };
        let st = SelectorState::new(cfg, k_prev);
        let sel = select_target(&st, &history, &target).unwrap();
        let lo = k_prev.min(target.len() - 1);
        prop_assert!(sel.k_new >= lo);
        prop_assert!(sel.k_new <= (lo + w).min(target.len() - 1));
        prop_assert_eq!(&sel.z_star, &target[sel.k_new]);
        // brute-force argmin with ties to the earliest index
        let best = (lo..=(lo + w).min(target.len() - 1))
            .map(|k| (k, reference_dtw(&history, &target[k.saturating_sub(hp)..=k])))
            .fold((lo, f64::INFINITY), |acc, c| if c.1 < acc.1 - 1e-12 { c } else { acc });
        let chosen = reference_dtw(&history, &target[sel.k_new.saturating_sub(hp)..=sel.k_new]);
        prop_assert!(chosen <= best.1 + 1e-9);
    }
}

#[test]
fn small_band_reports_no_path() {
    let a: Vec<StateVec<f64>> = (0..10).map(|i| StateVec::new(vec![i as f64])).collect();
    let b = a[..4].to_vec();
    assert!(dtw_distance(&a, &b, DtwParams::banded(5)).is_err());
    assert!(dtw_distance(&a, &b, DtwParams::banded(6)).is_ok());
}
