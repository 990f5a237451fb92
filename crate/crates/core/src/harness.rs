//! Closed-loop simulation of the task-level stack
//!
//! ```text
//! ż = f(z) + u_nom(z, z*) + u_a + σ
//! ```
//!
//! in two regimes: *perfect*, where the task state integrates the commanded
//! rate directly (plus σ), and *imperfect*, where a PID-controlled double
//! integrator tracks the reference `(z_ref, ż_ref)` at ten times the outer
//! rate under matched and unmatched disturbances.
//!
//! Controller outputs and σ are held constant over each outer step.

use std::io::Write;

use crate::clf::{clf_qp, ClfConfig};
use crate::disturbance::{Channel, Disturbances};
use crate::dtw::{dtw_distance, DtwBuffer, DtwParams};
use crate::error::{Error, Result};
use crate::integrate::{rk4_step, rollout};
use crate::l1::{L1Config, L1Controller};
use crate::plant::{LowLevelController, PlantState};
use crate::rbf::VectorFieldModel;
use crate::scalar::{from_usize, lit, Scalar};
use crate::selector::{select_target_with, History, SelectorConfig, SelectorState};
use crate::state::{DomainBox, StateVec};
use crate::trajectory::Trajectory;

/// Outer-loop inner substeps of the imperfect regime.
pub const INNER_SUBSTEPS: usize = 10;
/// Runs are truncated once the state leaves the model domain inflated by this factor.
pub const DOMAIN_INFLATION: f64 = 5.0;

/// How the target point `z*` is chosen each step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetMode {
    /// Windowed DTW selector.
    Dtw(SelectorConfig),
    /// `z*` is the target sample at the current time index.
    TimeIndexed,
}

/// Task-level controller stack. With neither CLF nor L1 the plan is the
/// learned field alone.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerStack<T> {
    pub clf: Option<ClfConfig<T>>,
    pub l1: Option<L1Config<T>>,
    pub target: TargetMode,
}

impl<T: Scalar> ControllerStack<T> {
    pub fn nominal() -> Self {
        Self {
            clf: None,
            l1: None,
            target: TargetMode::TimeIndexed,
        }
    }
}

/// Learned model, nominal target rollout and start state shared by every
/// controller variant of an experiment.
#[derive(Clone, Debug)]
pub struct Scenario<T> {
    pub model: VectorFieldModel<T>,
    /// Nominal target `Z*`: rollout of the model from the target start, on
    /// the outer grid.
    pub target: Trajectory<T>,
    pub z0: StateVec<T>,
    pub dt: T,
    /// Band used for the DTW score.
    pub metric: DtwParams,
    pub domain: DomainBox<T>,
}

impl<T: Scalar> Scenario<T> {
    /// Rolls the model out for `n` samples with `dt = 1/(n−1)` from
    /// `target_start`; the executed run starts from `z0`.
    pub fn new(
        model: VectorFieldModel<T>,
        target_start: &StateVec<T>,
        z0: StateVec<T>,
        n: usize,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig("need at least 2 grid points".into()));
        }
        z0.check_dim(model.dim())?;
        let dt = T::one() / from_usize::<T>(n - 1);
        let domain = model.domain.inflated(lit(DOMAIN_INFLATION));
        let roll = rollout(&model, target_start, dt, n - 1, Some(&domain))?;
        if roll.truncated {
            return Err(Error::InvalidConfig(
                "nominal target rollout leaves the operating domain".into(),
            ));
        }
        Ok(Self {
            model,
            target: roll.trajectory,
            z0,
            dt,
            metric: DtwParams::unbanded(),
            domain,
        })
    }

    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn with_start(&self, z0: StateVec<T>) -> Self {
        Self {
            z0,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime<T> {
    Perfect,
    Imperfect(LowLevelController<T>),
}

/// Everything recorded on the outer grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult<T> {
    pub executed: Trajectory<T>,
    /// Nominal target trajectory `z*(t)`.
    pub target: Trajectory<T>,
    /// Target point fed to the CLF at each step.
    pub selected: Vec<StateVec<T>>,
    pub reference: Trajectory<T>,
    pub selector_indices: Vec<usize>,
    pub sigma_hat_trace: Vec<StateVec<T>>,
    pub u_a_trace: Vec<StateVec<T>>,
    pub u_nom_trace: Vec<StateVec<T>>,
    /// Matched-channel disturbance; in the perfect regime this is σ.
    pub matched_trace: Vec<StateVec<T>>,
    pub unmatched_trace: Vec<StateVec<T>>,
    pub dtw_raw: T,
    pub truncated: bool,
}

impl<T: Scalar> RunResult<T> {
    pub fn len(&self) -> usize {
        self.executed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.executed.is_empty()
    }

    /// `‖z(t_k) − z*_sel(t_k)‖` at each step.
    pub fn tracking_errors(&self) -> Vec<T> {
        self.executed
            .states()
            .iter()
            .zip(&self.selected)
            .map(|(z, s)| z.distance(s))
            .collect()
    }

    /// `‖z(t_k) − z*(t_k)‖` against the time-indexed nominal target.
    pub fn time_indexed_errors(&self) -> Vec<T> {
        self.executed
            .states()
            .iter()
            .zip(self.target.states())
            .map(|(z, s)| z.distance(s))
            .collect()
    }
}

/// Perfect command following: `ż = f(z) + u_nom + u_a + σ(z, t)`.
pub fn run_perfect<T: Scalar>(
    scenario: &Scenario<T>,
    stack: &ControllerStack<T>,
    disturbances: &Disturbances<T>,
) -> Result<RunResult<T>> {
    if disturbances.has_channel(Channel::Matched) || disturbances.has_channel(Channel::Unmatched) {
        return Err(Error::InvalidConfig(
            "perfect regime accepts only task-channel (sigma) disturbances".into(),
        ));
    }
    simulate(scenario, stack, disturbances, &Regime::Perfect)
}

/// Imperfect command following through the PID-controlled double integrator.
pub fn run_imperfect<T: Scalar>(
    scenario: &Scenario<T>,
    stack: &ControllerStack<T>,
    disturbances: &Disturbances<T>,
    low_level: LowLevelController<T>,
) -> Result<RunResult<T>> {
    if disturbances.has_channel(Channel::Task) {
        return Err(Error::InvalidConfig(
            "imperfect regime accepts only matched/unmatched disturbances".into(),
        ));
    }
    simulate(scenario, stack, disturbances, &Regime::Imperfect(low_level))
}

pub fn simulate<T: Scalar>(
    scenario: &Scenario<T>,
    stack: &ControllerStack<T>,
    disturbances: &Disturbances<T>,
    regime: &Regime<T>,
) -> Result<RunResult<T>> {
    let d = scenario.dim();
    let n = scenario.n();
    let dt = scenario.dt;
    let model = &scenario.model;
    let target = scenario.target.states();
    disturbances.validate(d)?;
    if let Some(c) = &stack.clf {
        if c.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: c.dim(),
            });
        }
    }

    let l1 = stack
        .l1
        .as_ref()
        .map(|cfg| {
            if cfg.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: cfg.dim(),
                });
            }
            L1Controller::new(cfg.clone(), dt)
        })
        .transpose()?;
    let mut l1_state = l1.as_ref().map(|c| c.initial_state(&scenario.z0));

    // the selector only matters when a CLF consumes its output
    let selector_cfg = match stack.target {
        TargetMode::Dtw(cfg) if stack.clf.is_some() => {
            cfg.validate()?;
            Some(cfg)
        }
        _ => None,
    };
    let mut selector = selector_cfg
        .map(|cfg| SelectorState::nearest(cfg, target, &scenario.z0))
        .transpose()?;
    let mut history = History::new(selector_cfg.map_or(0, |c| c.history_h));
    let mut dtw_buf = DtwBuffer::default();

    let mut plant = match regime {
        Regime::Perfect => None,
        Regime::Imperfect(_) => Some(PlantState::moving(
            scenario.z0.clone(),
            model.eval(&scenario.z0)?,
        )),
    };
    let mut z = scenario.z0.clone();
    let mut z_ref = scenario.z0.clone();

    let mut out = Traces::with_capacity(n);
    let mut truncated = false;
    let zero = StateVec::zeros(d);

    for k in 0..n {
        let t = from_usize::<T>(k) * dt;
        if let Some(p) = &plant {
            z = p.p.clone();
        }
        out.executed.push(z.clone());
        out.reference.push(z_ref.clone());

        let k_sel = match &mut selector {
            Some(st) => {
                history.push(z.clone());
                let sel = select_target_with(st, history.as_slice(), target, &mut dtw_buf)?;
                *st = sel.state;
                sel.k_new
            }
            None => k.min(n - 1),
        };
        let z_star = &target[k_sel];

        let f_z = model.eval_unchecked(&z);
        let u_nom = match &stack.clf {
            Some(cfg) => {
                let f_star = model.eval_unchecked(z_star);
                clf_qp(cfg, &f_z, &f_star, &(&z - z_star))?
            }
            None => zero.clone(),
        };
        let (u_a, sigma_hat) = match (&l1, &mut l1_state) {
            (Some(ctl), Some(st)) => {
                let (next, u_a) = ctl.step(st, &z, &f_z, &u_nom)?;
                let sh = next.sigma_hat.clone();
                *st = next;
                (u_a, sh)
            }
            _ => (zero.clone(), zero.clone()),
        };
        let command = &u_nom + &u_a;
        let zref_rate = &f_z + &command;

        out.selected.push(z_star.clone());
        out.selector_indices.push(k_sel);
        out.u_nom.push(u_nom);
        out.u_a.push(u_a);
        out.sigma_hat.push(sigma_hat);

        let held = disturbances.is_held(t);
        match (regime, &mut plant) {
            (Regime::Perfect, _) => {
                let sigma = disturbances.sigma(&z, t);
                if k + 1 < n && !held {
                    let mut forcing = command.clone();
                    forcing += &sigma;
                    z = rk4_step(
                        |x| {
                            let mut r = model.eval_unchecked(x);
                            r += &forcing;
                            r
                        },
                        &z,
                        dt,
                    );
                }
                out.matched.push(sigma);
                out.unmatched.push(zero.clone());
            }
            (Regime::Imperfect(llc), Some(p)) => {
                out.matched.push(disturbances.eval_channel(Channel::Matched, t, d));
                out.unmatched.push(disturbances.eval_channel(Channel::Unmatched, t, d));
                if k + 1 < n {
                    let h = dt / from_usize::<T>(INNER_SUBSTEPS);
                    for s in 0..INNER_SUBSTEPS {
                        let tau = t + from_usize::<T>(s) * h;
                        if disturbances.is_held(tau) {
                            p.v = zero.clone();
                            continue;
                        }
                        let mut p_r = z_ref.clone();
                        p_r.axpy(from_usize::<T>(s) * h, &zref_rate);
                        let d_m = disturbances.eval_channel(Channel::Matched, tau, d);
                        let d_um = disturbances.eval_channel(Channel::Unmatched, tau, d);
                        *p = llc.euler_step(p, &p_r, &zref_rate, &d_m, &d_um, h);
                    }
                }
            }
            (Regime::Imperfect(_), None) => unreachable!("plant state exists in imperfect regime"),
        }
        z_ref.axpy(dt, &zref_rate);

        if k + 1 < n {
            let next = plant.as_ref().map_or(&z, |p| &p.p);
            if !next.is_finite()
                || !z_ref.is_finite()
                || !scenario.domain.contains(next)
                || plant.as_ref().is_some_and(|p| !p.is_finite())
            {
                truncated = true;
                break;
            }
        }
    }

    let dtw_raw = dtw_distance(&out.executed, target, scenario.metric)?;
    let grid = |states: Vec<StateVec<T>>| Trajectory::on_uniform_grid(dt, states);
    Ok(RunResult {
        executed: grid(out.executed)?,
        target: scenario.target.clone(),
        selected: out.selected,
        reference: grid(out.reference)?,
        selector_indices: out.selector_indices,
        sigma_hat_trace: out.sigma_hat,
        u_a_trace: out.u_a,
        u_nom_trace: out.u_nom,
        matched_trace: out.matched,
        unmatched_trace: out.unmatched,
        dtw_raw,
        truncated,
    })
}

struct Traces<T> {
    executed: Vec<StateVec<T>>,
    reference: Vec<StateVec<T>>,
    selected: Vec<StateVec<T>>,
    selector_indices: Vec<usize>,
    u_nom: Vec<StateVec<T>>,
    u_a: Vec<StateVec<T>>,
    sigma_hat: Vec<StateVec<T>>,
    matched: Vec<StateVec<T>>,
    unmatched: Vec<StateVec<T>>,
}

impl<T> Traces<T> {
    fn with_capacity(n: usize) -> Self {
        Self {
            executed: Vec::with_capacity(n),
            reference: Vec::with_capacity(n),
            selected: Vec::with_capacity(n),
            selector_indices: Vec::with_capacity(n),
            u_nom: Vec::with_capacity(n),
            u_a: Vec::with_capacity(n),
            sigma_hat: Vec::with_capacity(n),
            matched: Vec::with_capacity(n),
            unmatched: Vec::with_capacity(n),
        }
    }
}

/// `DTW(variant, z*) / DTW(baseline, z*)`.
pub fn normalized_dtw<T: Scalar>(
    variant: &RunResult<T>,
    baseline: &RunResult<T>,
    band: DtwParams,
) -> Result<T> {
    if variant.target != baseline.target {
        return Err(Error::InvalidConfig(
            "normalized DTW needs runs sharing the same target trajectory".into(),
        ));
    }
    let target = variant.target.states();
    let base = dtw_distance(baseline.executed.states(), target, band)?;
    if base.is_zero() {
        return Err(Error::DegenerateBaseline);
    }
    Ok(dtw_distance(variant.executed.states(), target, band)? / base)
}

/// Writes the per-step trace CSV:
/// `t, z1..zd, zstar1..zstard, zref1..zrefd, k_sel, unom1..unomd, ua1..uad,
/// sighat1..sighatd, dm1..dmd, dum1..dumd`.
pub fn write_trace_csv<T: Scalar, W: Write>(result: &RunResult<T>, out: W) -> Result<()> {
    let d = result.executed.dim();
    let wrap = |e: csv::Error| Error::Io {
        path: "trace".into(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for prefix in ["z", "zstar", "zref"] {
        header.extend((1..=d).map(|i| format!("{prefix}{i}")));
    }
    header.push("k_sel".into());
    for prefix in ["unom", "ua", "sighat", "dm", "dum"] {
        header.extend((1..=d).map(|i| format!("{prefix}{i}")));
    }
    w.write_record(&header).map_err(wrap)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for k in 0..result.len() {
        row.clear();
        row.push(result.executed.times()[k].to_string());
        for v in [
            &result.executed.states()[k],
            &result.selected[k],
            &result.reference.states()[k],
        ] {
            row.extend(v.iter().map(ToString::to_string));
        }
        row.push(result.selector_indices[k].to_string());
        for v in [
            &result.u_nom_trace[k],
            &result.u_a_trace[k],
            &result.sigma_hat_trace[k],
            &result.matched_trace[k],
            &result.unmatched_trace[k],
        ] {
            row.extend(v.iter().map(ToString::to_string));
        }
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "trace".into(),
        source: e,
    })
}
