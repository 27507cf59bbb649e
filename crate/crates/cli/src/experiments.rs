//! One function per subcommand: run the computation, emit CSV outputs and a
//! provenance sidecar per file.

use crate::cache::Cache;
use crate::config::{ClassicalMode, RunConfig, WignerFormat};
use crate::output::{write_atomic, write_sidecar, CsvTable, Sidecar};
use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use rabi_core::diagnostics::{
    self, Binning, ConvergenceQuantity, SweepSpec,
};
use rabi_core::numerics::{ks_critical_value, ks_statistic, KsLevel};
use rabi_core::quench::{QuenchState, TimeSampling, VarianceMode};
use rabi_core::semiclassical::{
    self, BenettinOptions, ClassicalState, IntegratorOptions, StateCoord, SurfaceSpec,
};
use rabi_core::wigner::{reduce_field, state_at_time, wigner_transform, GridSpec, WignerSource};
use rabi_core::{build_observable, to_eigenbasis, ModelParams, ObsKind};
use std::path::PathBuf;

pub struct Outcome {
    pub files: Vec<PathBuf>,
}

pub struct Runner<'a> {
    pub config: &'a RunConfig,
    pub cache: &'a Cache,
    pub experiment: &'static str,
    pub ntr_evidence: Option<Vec<(usize, f64)>>,
}

impl Runner<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    fn finish(&self, files: Vec<PathBuf>) -> Result<Outcome> {
        for file in &files {
            let sidecar = Sidecar {
                package_version: env!("CARGO_PKG_VERSION"),
                matrix_construction_version: rabi_core::hamiltonian::MATRIX_CONSTRUCTION_VERSION,
                experiment: self.experiment,
                seed: self.config.seed,
                config: self.config,
                ntr_evidence: self.ntr_evidence.as_deref(),
                cache_hits: self.cache.hits(),
                cache_computes: self.cache.computes(),
                outputs: &files,
            };
            let mut meta = file.clone();
            let name = meta
                .file_name()
                .map(|n| format!("{}.meta.json", n.to_string_lossy()))
                .unwrap_or_else(|| "output.meta.json".to_string());
            meta.set_file_name(name);
            write_sidecar(&meta, &sidecar)?;
        }
        Ok(Outcome { files })
    }

    fn model(&self) -> Result<ModelParams> {
        self.config.model.to_params()
    }

    fn quench_initial(&self) -> Result<ModelParams> {
        let mut p = self.config.quench_initial.to_params()?;
        p.n_tr = self.config.model.n_tr;
        Ok(p)
    }

    fn quench_state(&self) -> Result<(QuenchState, ModelParams)> {
        let model = self.model()?;
        let initial = self.quench_initial()?;
        let dec_initial = self.cache.get_or_compute(&initial)?;
        let dec_final = self.cache.get_or_compute(&model)?;
        let state = QuenchState::from_ground_state(dec_initial.vector(0), dec_final);
        Ok((state, model))
    }

    fn sampling(&self, n_samples: usize, t_max: f64) -> TimeSampling {
        TimeSampling { n_samples, t_min: 0.0, t_max, seed: self.config.seed }
    }

    pub fn spectrum(&self) -> Result<Outcome> {
        let model = self.model()?;
        let dec = self.cache.get_or_compute(&model)?;
        let pi = rabi_core::build_parity(model.n_tr);
        let diag = pi.diagonal();
        // at λ = 0 parity is a good quantum number: resolve degenerate
        // clusters so each line carries a sharp label
        let resolved;
        let dec_ref = if model.lambda == 0.0 {
            let mut d = (*dec).clone();
            d.resolve_degenerate_with(&pi, 1e-7)
                .map_err(|e| anyhow!("parity resolution failed: {e}"))?;
            resolved = d;
            &resolved
        } else {
            &*dec
        };
        let mut table = CsvTable::new(&["index", "energy", "parity_expectation"]);
        for nu in 0..dec_ref.dim() {
            let col = dec_ref.vector(nu);
            let parity: f64 = col.iter().zip(diag.iter()).map(|(c, p)| c * c * p).sum();
            table.push_row_mixed(&[nu as i64], &[dec_ref.energy(nu), parity]);
        }
        let path = self.out("spectrum.csv");
        table.write(&path)?;
        self.finish(vec![path])
    }

    pub fn potentials(&self) -> Result<Outcome> {
        let model = self.model()?;
        let opts = &self.config.potentials;
        if opts.points < 2 || opts.x_max <= opts.x_min {
            bail!("potentials grid must have at least 2 points with x_max > x_min");
        }
        let mut table = CsvTable::new(&["x", "v_minus", "v_plus"]);
        let dx = (opts.x_max - opts.x_min) / (opts.points - 1) as f64;
        for k in 0..opts.points {
            let x = opts.x_min + k as f64 * dx;
            let (vm, vp) = semiclassical::adiabatic_potentials(x, &model);
            table.push_row(&[x, vm, vp]);
        }
        let path = self.out("potentials.csv");
        table.write(&path)?;
        self.finish(vec![path])
    }

    pub fn levelstats(&self) -> Result<Outcome> {
        let model = self.model()?;
        let opts = &self.config.levelstats;
        let dec = self.cache.get_or_compute(&model)?;
        let window = (opts.e_min, opts.e_max);
        let spacings = diagnostics::level_spacings(&dec, window)?;
        let binning = opts.bins.map(Binning::Fixed).unwrap_or(Binning::FreedmanDiaconis);
        let hist = diagnostics::spacing_histogram(&dec, window, binning)?;

        let mut table =
            CsvTable::new(&["s_center", "density", "poisson_reference", "wigner_dyson_reference"]);
        let centers = hist.bin_centers();
        let (poisson, wigner) = diagnostics::reference_distributions(&centers)?;
        for (((c, d), p), w) in
            centers.iter().zip(hist.counts.iter()).zip(poisson.iter()).zip(wigner.iter())
        {
            table.push_row(&[*c, *d, *p, *w]);
        }
        let hist_path = self.out("levelstats_histogram.csv");
        table.write(&hist_path)?;

        let mut raw = CsvTable::new(&["spacing"]);
        for s in &spacings {
            raw.push_row(&[*s]);
        }
        let raw_path = self.out("levelstats_spacings.csv");
        raw.write(&raw_path)?;

        let ks_poisson = ks_statistic(&spacings, diagnostics::poisson_spacing_cdf);
        let ks_wd = ks_statistic(&spacings, diagnostics::wigner_dyson_spacing_cdf);
        let mut summary = CsvTable::new(&[
            "n_spacings",
            "mean_spacing",
            "ks_poisson",
            "ks_wigner_dyson",
            "ks_critical_1pct",
            "ks_critical_5pct",
        ]);
        summary.push_row_mixed(
            &[spacings.len() as i64],
            &[
                hist.mean_spacing,
                ks_poisson,
                ks_wd,
                ks_critical_value(spacings.len(), KsLevel::OnePercent),
                ks_critical_value(spacings.len(), KsLevel::FivePercent),
            ],
        );
        let summary_path = self.out("levelstats_summary.csv");
        summary.write(&summary_path)?;
        self.finish(vec![hist_path, raw_path, summary_path])
    }

    fn observable_kind(name: &str) -> Result<ObsKind> {
        Ok(match name {
            "n" => ObsKind::Number,
            "x" => ObsKind::X,
            "p" => ObsKind::P,
            "sx" => ObsKind::SigmaX,
            "sy" => ObsKind::SigmaY,
            "sz" => ObsKind::SigmaZ,
            "xsx" => ObsKind::XSigmaX,
            other => bail!("unknown observable '{other}' (expected n|x|p|sx|sy|sz|xsx)"),
        })
    }

    pub fn quench_stats(&self) -> Result<Outcome> {
        let opts = self.config.quench_stats.clone();
        let (state, model) = self.quench_state()?;
        let kind = Self::observable_kind(&opts.observable)?;
        let obs = build_observable(kind, model.n_tr)?;
        let obs_eig = to_eigenbasis(&obs, state.decomposition())?;

        let mean = state.long_time_average(&obs_eig);
        let sampling = self.sampling(opts.n_samples, opts.t_max);
        let var = state.long_time_variance(&obs_eig, VarianceMode::Spectral, &sampling);
        let eta = diagnostics::ipr(state.coefficients().view())?;

        // microcanonical comparison at the quench energy; the interesting
        // result is the discrepancy, which is reported, not asserted away
        let delta_mc =
            diagnostics::default_microcanonical_delta(state.decomposition(), state.energy());
        let mc = diagnostics::microcanonical_average(
            state.decomposition(),
            &obs_eig,
            state.energy(),
            delta_mc,
        )?;

        let mut summary = CsvTable::new(&[
            "quench_energy",
            "long_time_mean",
            "delta",
            "scaled_delta",
            "ipr",
            "gap_collision_fraction",
            "dropped_weight",
            "fell_back_to_sampling",
            "microcanonical_mean",
            "microcanonical_window",
            "thermalization_discrepancy",
        ]);
        summary.push_row(&[
            state.energy(),
            mean,
            var.delta,
            var.delta / mean,
            eta,
            var.gap_collision_fraction,
            var.dropped_weight,
            if var.fell_back_to_sampling { 1.0 } else { 0.0 },
            mc,
            delta_mc,
            mean - mc,
        ]);
        let summary_path = self.out("quench_summary.csv");
        summary.write(&summary_path)?;

        let mut gamma = CsvTable::new(&["l", "population"]);
        for (l, w) in diagnostics::eigenstate_population(&state).iter().enumerate() {
            gamma.push_row_mixed(&[l as i64], &[*w]);
        }
        let gamma_path = self.out("quench_gamma.csv");
        gamma.write(&gamma_path)?;
        self.finish(vec![summary_path, gamma_path])
    }

    pub fn gaussianity(&self) -> Result<Outcome> {
        let opts = self.config.gaussianity.clone();
        let (state, model) = self.quench_state()?;
        let obs = build_observable(ObsKind::Number, model.n_tr)?;
        let obs_eig = to_eigenbasis(&obs, state.decomposition())?;
        let report = diagnostics::gaussianity_test(
            &state,
            &obs_eig,
            opts.n_samples,
            opts.t_max,
            self.config.seed,
        )?;

        let sampling = TimeSampling {
            n_samples: opts.n_samples,
            t_min: diagnostics::BURN_IN_TIME,
            t_max: opts.t_max,
            seed: self.config.seed,
        };
        let times = QuenchState::sampling_times(&sampling);
        let mut samples = CsvTable::new(&["t", "n_bar"]);
        for (t, v) in times.iter().zip(report.samples.iter()) {
            samples.push_row(&[*t, *v]);
        }
        let samples_path = self.out("gaussianity_samples.csv");
        samples.write(&samples_path)?;

        let crit5 = ks_critical_value(opts.n_samples, KsLevel::FivePercent);
        let mut summary = CsvTable::new(&[
            "n_samples",
            "ks_statistic",
            "ks_critical_5pct",
            "ks_critical_1pct",
            "reference_mean",
            "reference_sigma",
            "passes_5pct",
        ]);
        summary.push_row_mixed(
            &[opts.n_samples as i64],
            &[
                report.ks_statistic,
                crit5,
                ks_critical_value(opts.n_samples, KsLevel::OnePercent),
                report.reference_mean,
                report.reference_sigma,
                if report.ks_statistic < crit5 { 1.0 } else { 0.0 },
            ],
        );
        let summary_path = self.out("gaussianity_summary.csv");
        summary.write(&summary_path)?;
        self.finish(vec![samples_path, summary_path])
    }

    pub fn wigner(&self) -> Result<Outcome> {
        let opts = self.config.wigner.clone();
        let (state, model) = self.quench_state()?;
        let (psi, time, source) = match opts.eigenstate_energy {
            Some(target) => {
                let dec = state.decomposition();
                let nu = dec
                    .energies()
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
                    .map(|(i, _)| i)
                    .ok_or_else(|| anyhow!("empty spectrum"))?;
                let psi = dec.vector(nu).mapv(|v| Complex64::new(v, 0.0)).to_owned();
                (psi, None, WignerSource::Eigenstate)
            }
            None => (state_at_time(&state, opts.time), Some(opts.time), WignerSource::EvolvedState),
        };
        let rho = reduce_field(&psi)?;
        let grid = GridSpec::square(
            opts.half_width.unwrap_or(2.0 * model.g + 5.0),
            opts.points,
        );
        let w = wigner_transform(&rho, &grid, time, source)?;

        let mut files = Vec::new();
        match opts.format {
            WignerFormat::Csv => {
                let mut table = CsvTable::new(&["x", "p", "w"]);
                for (i, &x) in w.x_axis.iter().enumerate() {
                    for (j, &p) in w.p_axis.iter().enumerate() {
                        table.push_row(&[x, p, w.values[(i, j)]]);
                    }
                }
                let path = self.out("wigner.csv");
                table.write(&path)?;
                files.push(path);
            }
            WignerFormat::Binary => {
                let mut bytes = Vec::with_capacity(8 * w.values.len());
                for v in w.values.iter() {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
                let path = self.out("wigner.w64");
                write_atomic(&path, &bytes)?;
                let header = serde_json::json!({
                    "layout": "row-major f64 little-endian, rows indexed by x",
                    "x": {"min": w.x_axis[0], "max": w.x_axis[w.x_axis.len()-1], "points": w.x_axis.len()},
                    "p": {"min": w.p_axis[0], "max": w.p_axis[w.p_axis.len()-1], "points": w.p_axis.len()},
                    "time": w.time,
                    "source": format!("{:?}", w.source),
                    "model": self.config.model,
                });
                let header_path = self.out("wigner_header.json");
                write_atomic(&header_path, serde_json::to_string_pretty(&header)?.as_bytes())?;
                files.push(path);
                files.push(header_path);
            }
        }

        let mut summary = CsvTable::new(&[
            "normalization",
            "negativity_volume",
            "max_imag_residue",
            "origin_value",
            "origin_parity_value",
        ]);
        summary.push_row(&[
            w.normalization(),
            w.negativity_volume(),
            w.max_imag_residue,
            w.origin_value,
            w.origin_parity_value,
        ]);
        let summary_path = self.out("wigner_summary.csv");
        summary.write(&summary_path)?;
        files.push(summary_path);
        self.finish(files)
    }

    pub fn classical(&self) -> Result<Outcome> {
        let model = self.model()?;
        let opts = self.config.classical.clone();
        let s0 = ClassicalState::new(opts.x, opts.p, opts.z, opts.dphi)
            .map_err(|e| anyhow!("invalid initial state: {e}"))?;
        let int_opts = IntegratorOptions { rtol: opts.rtol, atol: opts.rtol, ..Default::default() };
        match opts.mode {
            ClassicalMode::Trajectory => {
                let traj = semiclassical::integrate(&s0, &model, opts.t_end, opts.dt, &int_opts)?;
                let mut table = CsvTable::new(&["t", "x", "p", "z", "dphi", "energy"]);
                for ((t, s), e) in
                    traj.times.iter().zip(traj.states.iter()).zip(traj.energies.iter())
                {
                    table.push_row(&[*t, s.x, s.p, s.z, s.dphi, *e]);
                }
                let path = self.out("classical_trajectory.csv");
                table.write(&path)?;
                self.finish(vec![path])
            }
            ClassicalMode::Section => {
                let coord = match opts.surface_coord.as_str() {
                    "x" => StateCoord::X,
                    "p" => StateCoord::P,
                    "z" => StateCoord::Z,
                    "dphi" => StateCoord::DPhi,
                    other => bail!("unknown surface coordinate '{other}'"),
                };
                let record = match coord {
                    StateCoord::Z | StateCoord::DPhi => (StateCoord::X, StateCoord::P),
                    _ => (StateCoord::Z, StateCoord::DPhi),
                };
                let surface = SurfaceSpec { coord, level: opts.surface_level, record };
                let section = semiclassical::poincare_section_live(
                    &s0, &model, opts.t_end, &surface, &int_opts,
                )?;
                let mut table = CsvTable::new(&["t", "c1", "c2", "x", "p", "z", "dphi", "energy"]);
                for (t, s) in &section {
                    let (c1, c2) = surface.record_pair(s);
                    let e = semiclassical::classical_energy(s, &model)
                        .map_err(|e| anyhow!("section point left the Bloch ball: {e}"))?;
                    table.push_row(&[*t, c1, c2, s.x, s.p, s.z, s.dphi, e]);
                }
                let path = self.out("classical_section.csv");
                table.write(&path)?;
                self.finish(vec![path])
            }
            ClassicalMode::Lyapunov => {
                let ben = BenettinOptions {
                    integrator: int_opts,
                    ..Default::default()
                };
                let est =
                    semiclassical::lyapunov_largest(&s0, &model, opts.lyapunov_t, &ben)?;
                let mut table = CsvTable::new(&["t", "running_exponent"]);
                for (t, l) in &est.history {
                    table.push_row(&[*t, *l]);
                }
                let path = self.out("classical_lyapunov.csv");
                table.write(&path)?;
                let mut summary = CsvTable::new(&["exponent", "converged"]);
                summary.push_row(&[est.exponent, if est.converged { 1.0 } else { 0.0 }]);
                let summary_path = self.out("classical_lyapunov_summary.csv");
                summary.write(&summary_path)?;
                self.finish(vec![path, summary_path])
            }
        }
    }

    pub fn sweep(&self) -> Result<Outcome> {
        let model = self.model()?;
        let opts = self.config.sweep.clone();
        if opts.g_steps < 2 || opts.g_max <= opts.g_min {
            bail!("sweep needs g_steps >= 2 and g_max > g_min");
        }
        let initial = self.quench_initial()?;
        let g_values: Vec<f64> = (0..opts.g_steps)
            .map(|k| {
                opts.g_min + (opts.g_max - opts.g_min) * k as f64 / (opts.g_steps - 1) as f64
            })
            .collect();
        let spec = SweepSpec {
            initial_g: initial.g,
            initial_lambda: initial.lambda,
            observable: ObsKind::Number,
            sampling: self.sampling(opts.n_samples, opts.t_max),
        };
        let rows = diagnostics::variance_sweep(&g_values, &model, &spec)?;
        let mut table = CsvTable::new(&[
            "g",
            "n_tr",
            "quench_energy",
            "long_time_mean",
            "delta",
            "scaled_delta",
            "ipr",
            "gap_collision_fraction",
            "dropped_weight",
            "fell_back_to_sampling",
        ]);
        for r in &rows {
            table.push_row_mixed(
                &[],
                &[
                    r.g,
                    r.n_tr as f64,
                    r.quench_energy,
                    r.long_time_mean,
                    r.delta,
                    r.ratio,
                    r.ipr,
                    r.gap_collision_fraction,
                    r.dropped_weight,
                    if r.fell_back_to_sampling { 1.0 } else { 0.0 },
                ],
            );
        }
        let path = self.out("sweep.csv");
        table.write(&path)?;
        self.finish(vec![path])
    }
}

/// Resolve n_tr by the doubling schedule when auto mode is requested.
pub fn resolve_ntr(
    config: &mut RunConfig,
    experiment: &str,
) -> Result<Option<Vec<(usize, f64)>>> {
    let Some(tol) = config.ntr_auto_tol else {
        return Ok(None);
    };
    let template = config.model.to_params()?;
    let quantity = match experiment {
        "levelstats" => ConvergenceQuantity::LevelCountBelow { energy: config.levelstats.e_max },
        "quench-stats" | "gaussianity" | "wigner" | "sweep" => {
            ConvergenceQuantity::QuenchMeanBoson {
                initial_g: config.quench_initial.g,
                initial_lambda: config.quench_initial.lambda,
            }
        }
        _ => ConvergenceQuantity::GroundEnergy,
    };
    let outcome =
        diagnostics::convergence_sweep_with_cap(&template, quantity, tol, config.ntr_cap)
            .context("n_tr convergence sweep failed")?;
    config.model.n_tr = outcome.n_tr;
    Ok(Some(outcome.history))
}
