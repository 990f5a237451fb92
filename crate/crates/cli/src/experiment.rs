//! Turns an [`ExperimentConfig`] into fitted models, controller stacks and
//! simulated runs.

use l1ds_core::certificate::CertificateInputs;
use l1ds_core::clf::ClfConfig;
use l1ds_core::disturbance::{Channel, DisturbanceSpec, Disturbances, HoldWindow};
use l1ds_core::harness::{simulate, ControllerStack, Regime, RunResult, Scenario, TargetMode};
use l1ds_core::l1::L1Config;
use l1ds_core::linalg::Matrix;
use l1ds_core::plant::{LowLevelController, PidGains};
use l1ds_core::rbf::{fit_rbf, FitOptions, FitReport, VectorFieldModel};
use l1ds_core::selector::SelectorConfig;
use l1ds_core::state::StateVec;
use l1ds_core::trajectory::{load_demo_dir, mean_start, resample_demo, Trajectory};
use l1ds_core::clf_value;

use crate::config::{
    ControllerKind, DemoSource, ExperimentConfig, RegimeKind, RegimeSection, SelectorMode,
};
use crate::error::CliError;

/// Raw demonstrations for one repetition seed.
pub fn load_demos(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Trajectory<f64>>, CliError> {
    let mut demos = match cfg.demos.source {
        DemoSource::Synthetic => cfg.demos.shape.generate(seed)?,
        DemoSource::Directory => {
            let path = cfg.demos.path.as_ref().ok_or_else(|| {
                CliError::Config("demos.path is required when demos.source = \"directory\"".into())
            })?;
            load_demo_dir(path)?
        }
    };
    if let Some(k) = cfg.preprocess.max_demos {
        if k == 0 {
            return Err(CliError::Config("preprocess.max_demos must be positive".into()));
        }
        demos.truncate(k);
    }
    Ok(demos)
}

#[derive(Clone, Debug)]
pub struct FittedModel {
    pub demos: Vec<Trajectory<f64>>,
    pub model: VectorFieldModel<f64>,
    pub report: FitReport,
}

pub fn fit_model(cfg: &ExperimentConfig, seed: u64) -> Result<FittedModel, CliError> {
    let raw = load_demos(cfg, seed)?;
    let demos = raw
        .iter()
        .map(|d| resample_demo(d, cfg.preprocess.n))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = FitOptions {
        seed: cfg.model.seed.wrapping_add(seed),
        ..cfg.model.clone()
    };
    let (model, report) = fit_rbf(&demos, &opts)?;
    Ok(FittedModel {
        demos,
        model,
        report,
    })
}

/// Nominal target from the mean demo start; the executed start is offset by
/// `start.offset`.
pub fn scenario(cfg: &ExperimentConfig, fitted: &FittedModel) -> Result<Scenario<f64>, CliError> {
    let start = mean_start(&fitted.demos)?;
    let mut z0 = start.clone();
    if let Some(off) = &cfg.start.offset {
        let off = StateVec::new(off.clone());
        off.check_dim(start.dim())?;
        z0 += &off;
    }
    let mut sc = Scenario::new(fitted.model.clone(), &start, z0, cfg.preprocess.n)?;
    sc.metric = cfg.dtw;
    Ok(sc)
}

pub fn prepare(cfg: &ExperimentConfig, seed: u64) -> Result<(FittedModel, Scenario<f64>), CliError> {
    let fitted = fit_model(cfg, seed)?;
    let sc = scenario(cfg, &fitted)?;
    Ok((fitted, sc))
}

pub fn clf_config(cfg: &ExperimentConfig, dim: usize) -> Result<ClfConfig<f64>, CliError> {
    Ok(match &cfg.clf.p_diag {
        Some(p) => {
            if p.len() != dim {
                return Err(CliError::Config(format!(
                    "clf.p_diag has {} entries, state dimension is {dim}",
                    p.len()
                )));
            }
            ClfConfig::diagonal(p, cfg.clf.c)?
        }
        None => ClfConfig::identity(dim, cfg.clf.c)?,
    })
}

pub fn l1_config(cfg: &ExperimentConfig, dim: usize, dt: f64) -> Result<L1Config<f64>, CliError> {
    let t_sample = cfg.l1.t_sample.unwrap_or(dt);
    Ok(match &cfg.l1.a_s_diag {
        Some(a) => {
            if a.len() != dim {
                return Err(CliError::Config(format!(
                    "l1.a_s_diag has {} entries, state dimension is {dim}",
                    a.len()
                )));
            }
            L1Config::new(StateVec::new(a.clone()), cfg.l1.omega, t_sample)?
        }
        None => L1Config::isotropic(dim, cfg.l1.a_s, cfg.l1.omega, t_sample)?,
    })
}

pub fn target_mode(cfg: &ExperimentConfig) -> TargetMode {
    match cfg.selector.mode {
        SelectorMode::TimeIndexed => TargetMode::TimeIndexed,
        SelectorMode::Dtw => TargetMode::Dtw(SelectorConfig {
            window_w: cfg.selector.window_w,
            history_h: cfg.selector.history_h,
            target_history: cfg.selector.target_history.unwrap_or(cfg.selector.history_h),
        }),
    }
}

/// The stack switched on in the configuration.
pub fn configured_stack(cfg: &ExperimentConfig, dim: usize, dt: f64) -> Result<ControllerStack<f64>, CliError> {
    Ok(ControllerStack {
        clf: cfg.clf.enabled.then(|| clf_config(cfg, dim)).transpose()?,
        l1: cfg.l1.enabled.then(|| l1_config(cfg, dim, dt)).transpose()?,
        target: target_mode(cfg),
    })
}

/// One of the three compared controller variants, using the configured
/// gains regardless of the enable flags.
pub fn variant_stack(
    cfg: &ExperimentConfig,
    kind: ControllerKind,
    dim: usize,
    dt: f64,
) -> Result<ControllerStack<f64>, CliError> {
    Ok(match kind {
        ControllerKind::Nominal => ControllerStack::nominal(),
        ControllerKind::ClfOnly => ControllerStack {
            clf: Some(clf_config(cfg, dim)?),
            l1: None,
            target: target_mode(cfg),
        },
        ControllerKind::L1 => ControllerStack {
            clf: Some(clf_config(cfg, dim)?),
            l1: Some(l1_config(cfg, dim, dt)?),
            target: target_mode(cfg),
        },
    })
}

pub fn disturbances(
    specs: &[DisturbanceSpec<f64>],
    task_gain: Option<&Vec<Vec<f64>>>,
    hold: Option<HoldWindow<f64>>,
) -> Result<Disturbances<f64>, CliError> {
    Ok(Disturbances {
        specs: specs.to_vec(),
        task_gain: task_gain.map(|rows| Matrix::from_rows(rows)).transpose()?,
        hold,
    })
}

pub fn regime_disturbances(regime: &RegimeSection) -> Result<Disturbances<f64>, CliError> {
    disturbances(&regime.disturbances, regime.task_gain.as_ref(), regime.hold)
}

/// Checks that disturbance channels fit the regime.
pub fn check_routing(kind: RegimeKind, dist: &Disturbances<f64>) -> Result<(), CliError> {
    let ok = match kind {
        RegimeKind::Perfect => {
            !dist.has_channel(Channel::Matched) && !dist.has_channel(Channel::Unmatched)
        }
        RegimeKind::Imperfect => !dist.has_channel(Channel::Task),
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "the {} regime does not accept {} disturbances",
            kind.name(),
            match kind {
                RegimeKind::Perfect => "matched/unmatched (plant-level)",
                RegimeKind::Imperfect => "task-level (sigma)",
            }
        )))
    }
}

pub fn low_level(pid: PidGains<f64>, windup_scale: f64, dist: &Disturbances<f64>) -> Result<LowLevelController<f64>, CliError> {
    let gains = PidGains::new(pid.kp, pid.ki, pid.kd)?;
    let scale = dist
        .specs
        .iter()
        .filter(|s| s.channel != Channel::Task)
        .map(|s| s.signal.norm_bound())
        .fold(1.0, f64::max);
    if !(windup_scale > 0.0) {
        return Err(CliError::Config("regime.windup_scale must be positive".into()));
    }
    Ok(LowLevelController {
        gains,
        windup_limit: windup_scale * scale,
    })
}

pub fn run_stack(
    sc: &Scenario<f64>,
    stack: &ControllerStack<f64>,
    kind: RegimeKind,
    dist: &Disturbances<f64>,
    pid: PidGains<f64>,
    windup_scale: f64,
) -> Result<RunResult<f64>, CliError> {
    check_routing(kind, dist)?;
    let regime = match kind {
        RegimeKind::Perfect => Regime::Perfect,
        RegimeKind::Imperfect => Regime::Imperfect(low_level(pid, windup_scale, dist)?),
    };
    Ok(simulate(sc, stack, dist, &regime)?)
}

/// Runs the configured stack and the nominal baseline under the configured
/// regime.
pub fn run_configured(
    cfg: &ExperimentConfig,
    sc: &Scenario<f64>,
) -> Result<(RunResult<f64>, RunResult<f64>), CliError> {
    let dist = regime_disturbances(&cfg.regime)?;
    let stack = configured_stack(cfg, sc.dim(), sc.dt)?;
    let r = &cfg.regime;
    let variant = run_stack(sc, &stack, r.kind, &dist, r.pid, r.windup_scale)?;
    let baseline = run_stack(sc, &ControllerStack::nominal(), r.kind, &dist, r.pid, r.windup_scale)?;
    Ok((variant, baseline))
}

fn max_norm<'a>(it: impl Iterator<Item = &'a StateVec<f64>>) -> f64 {
    it.map(StateVec::norm).fold(0.0, f64::max)
}

/// Certificate inputs measured from a simulation of the configured
/// experiment (CLF and L1 must both be enabled). Measured maxima are scaled
/// by `certificate.inflation`; `Δ_σ` and `L_σz` come from the disturbance
/// specification.
pub fn auto_certificate(
    cfg: &ExperimentConfig,
    sc: &Scenario<f64>,
) -> Result<CertificateInputs<f64>, CliError> {
    if !cfg.clf.enabled || !cfg.l1.enabled {
        return Err(CliError::Config(
            "automatic certificate needs clf.enabled and l1.enabled".into(),
        ));
    }
    let d = sc.dim();
    let clf = clf_config(cfg, d)?;
    let l1 = l1_config(cfg, d, sc.dt)?;
    let dist = regime_disturbances(&cfg.regime)?;
    let stack = configured_stack(cfg, d, sc.dt)?;
    let r = &cfg.regime;
    let run = run_stack(sc, &stack, r.kind, &dist, r.pid, r.windup_scale)?;

    let l_sigma_z = dist.task_gain.as_ref().map_or(0.0, Matrix::spectral_norm);
    let radius = sc
        .domain
        .lower
        .iter()
        .zip(sc.domain.upper.iter())
        .map(|(l, u)| l.abs().max(u.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let delta_sigma = dist.specs.iter().map(|s| s.signal.norm_bound()).sum::<f64>() + l_sigma_z * radius;

    let k = cfg.certificate.inflation;
    let f_max = max_norm(
        run.executed
            .states()
            .iter()
            .map(|z| sc.model.eval(z))
            .collect::<Result<Vec<_>, _>>()?
            .iter(),
    );
    let nom_max = max_norm(run.u_nom_trace.iter());
    let sighat_max = max_norm(run.sigma_hat_trace.iter());
    let e0 = &run.executed.states()[0] - &run.selected[0];

    let mut inputs = CertificateInputs {
        delta_sigma,
        l_sigma_z,
        delta_f: k * f_max,
        delta_nom: k * nom_max,
        delta_sigma_hat: (k * sighat_max).max(delta_sigma),
        delta_b: 0.0,
        alpha1: clf.alpha1(),
        alpha2: clf.alpha2(),
        lambda: clf.lambda(),
        v0: clf_value(&clf, &e0)?,
        epsilon: cfg.certificate.epsilon,
        dim: d,
        a_s_diag: l1.a_s_diag().as_slice().to_vec(),
        omega: l1.omega(),
        t_sample: l1.t_sample(),
        t1_minus_t0: cfg.certificate.t1,
    };
    inputs.delta_b = clf.delta_b(inputs.rho());
    Ok(inputs)
}

/// Resolves certificate inputs from the configuration.
pub fn certificate_inputs(cfg: &ExperimentConfig) -> Result<CertificateInputs<f64>, CliError> {
    use crate::config::CertificateMode;
    match cfg.certificate.mode {
        CertificateMode::Explicit => cfg.certificate.inputs.clone().ok_or_else(|| {
            CliError::Config("certificate.mode = \"explicit\" needs a [certificate.inputs] table".into())
        }),
        CertificateMode::Auto => {
            let (_, sc) = prepare(cfg, cfg.first_seed())?;
            auto_certificate(cfg, &sc)
        }
    }
}
