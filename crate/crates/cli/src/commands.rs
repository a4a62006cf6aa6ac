use clap::ArgMatches;
use weakval_core::classical::{self, Binning, PhaseSpaceDensity, PhaseSpaceObservable};
use weakval_core::io::{self, format_float, Cell, Meta, Table};
use weakval_core::measurement::{self, PointerState};
use weakval_core::quasiprob::{self, QuasiprobField};
use weakval_core::state::TRUNCATION_TOLERANCE;
use weakval_core::{
    coherent_state, fock_state, negativity_probability, negativity_probability_numeric,
    negativity_region, weak_value, CoherentAmplitude, MixedState, ObservableSpec, QuadratureGrid,
};

use crate::args::*;
use crate::output::{emit, is_stdout, render_table, report, resolved_config};
use crate::Failure;

pub fn run(cli: Cli, matches: &ArgMatches) -> Result<(), Failure> {
    let meta = resolved_config(matches);
    match cli.command {
        Command::Weakvalue(a) => weakvalue(a, meta),
        Command::Fig1(a) => fig1(a, meta),
        Command::Fig2(a) => fig2(a, meta),
        Command::Quasiprob(a) => quasiprob(a, meta),
        Command::Simulate(a) if a.classical => simulate_classical(a, meta),
        Command::Simulate(a) => simulate_quantum(a, meta),
        Command::Convergence(a) => convergence(a, meta),
    }
}

fn build_grid(q_min: f64, q_max: f64, points: usize) -> Result<QuadratureGrid, Failure> {
    if points < 4 || !points.is_multiple_of(2) {
        return Err(Failure::config(format!(
            "--points must be an even number of at least 4, got {points}"
        )));
    }
    Ok(QuadratureGrid::new(q_min, q_max, points)?)
}

fn finite(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::config(format!("--{name} must be finite")))
    }
}

fn build_state(state: &StateArgs, grid: &QuadratureGrid) -> Result<MixedState, Failure> {
    let wf = match state.fock {
        Some(n) => fock_state(n, grid)?,
        None => coherent_state(amplitude(state.alpha_r, state.alpha_i)?, grid)?,
    };
    wf.check_truncation(TRUNCATION_TOLERANCE)?;
    Ok(MixedState::pure(wf))
}

fn amplitude(alpha_r: f64, alpha_i: f64) -> Result<CoherentAmplitude, Failure> {
    Ok(CoherentAmplitude::from_quadratures(
        finite("alpha-r", alpha_r)?,
        finite("alpha-i", alpha_i)?,
    ))
}

fn observable(name: &str) -> Result<ObservableSpec, Failure> {
    ObservableSpec::from_name(name)
        .map_err(|_| Failure::config(format!("unknown observable `{name}`")))
}

fn check_epsilon(epsilon: f64) -> Result<f64, Failure> {
    if epsilon.is_finite() && epsilon >= 0.0 {
        Ok(epsilon)
    } else {
        Err(Failure::config(format!(
            "--epsilon must be finite and nonnegative, got {epsilon}"
        )))
    }
}

fn parse_mixture(parts: &[String]) -> Result<Vec<(f64, f64)>, Failure> {
    parts
        .iter()
        .map(|part| {
            let bad =
                || Failure::config(format!("mixture component `{part}` is not `weight:width`"));
            let (w, s) = part.split_once(':').ok_or_else(bad)?;
            let w: f64 = w.trim().parse().map_err(|_| bad())?;
            let s: f64 = s.trim().parse().map_err(|_| bad())?;
            if !(w > 0.0 && w.is_finite() && s > 0.0 && s.is_finite()) {
                return Err(bad());
            }
            Ok((w, s))
        })
        .collect()
}

fn build_pointer(args: &PointerArgs) -> Result<PointerState, Failure> {
    let sigma = args.sigma;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Failure::config(format!(
            "--sigma must be positive, got {sigma}"
        )));
    }
    if !(args.pointer_extent.is_finite() && args.pointer_extent > 0.0) {
        return Err(Failure::config("--pointer-extent must be positive"));
    }
    finite("pointer-drift", args.pointer_drift)?;
    let components = match args.pointer {
        PointerShape::Gaussian => vec![(1.0, 1.0)],
        PointerShape::Mixture => parse_mixture(&args.mixture)?,
    };
    let widest = components.iter().map(|c| c.1).fold(0.0, f64::max) * sigma;
    let grid = build_grid(
        -args.pointer_extent * widest,
        args.pointer_extent * widest,
        args.pointer_points,
    )?;
    let scaled: Vec<(f64, f64)> = components.iter().map(|(w, s)| (*w, s * sigma)).collect();
    let pointer = PointerState::gaussian_mixture(&scaled, &grid)?;
    if args.pointer_drift != 0.0 {
        Ok(pointer.with_drift(args.pointer_drift)?)
    } else {
        Ok(pointer)
    }
}

fn push_meta(meta: &mut Meta, key: &str, value: impl ToString) {
    meta.push((key.into(), value.to_string()));
}

fn weakvalue(a: WeakvalueArgs, mut meta: Meta) -> Result<(), Failure> {
    let grid = build_grid(a.grid.q_min, a.grid.q_max, a.grid.points)?;
    let obs = observable(&a.obs)?;
    let alpha = amplitude(a.alpha_r, a.alpha_i)?;
    let wf = coherent_state(alpha, &grid)?;
    wf.check_truncation(TRUNCATION_TOLERANCE)?;
    let profile = weak_value(&obs, &MixedState::pure(wf))?;
    let region = (a.obs == "p2").then(|| negativity_region(alpha));
    if let Some((low, high)) = region {
        push_meta(&mut meta, "negativity_region_low", format_float(low));
        push_meta(&mut meta, "negativity_region_high", format_float(high));
        push_meta(
            &mut meta,
            "negativity_probability",
            format_float(negativity_probability(alpha)),
        );
    }
    let table = io::profile_table(&profile).with_meta(&meta);
    let bytes = render_table(&table, a.out.format)?;
    emit(a.out.output.as_deref(), &bytes)?;
    if let Some((low, high)) = region {
        report(
            is_stdout(a.out.output.as_deref()),
            &format!(
                "negativity region: Re (p2)_w < 0 for q < {} or q > {}",
                format_float(low),
                format_float(high)
            ),
        );
    }
    Ok(())
}

fn fig1(a: Fig1Args, meta: Meta) -> Result<(), Failure> {
    let grid = build_grid(a.grid.q_min, a.grid.q_max, a.grid.points)?;
    let (low, high) = (
        finite("alpha-i-min", a.alpha_i_min)?,
        finite("alpha-i-max", a.alpha_i_max)?,
    );
    if a.alpha_i_steps == 0 || high < low || (a.alpha_i_steps == 1 && high != low) {
        return Err(Failure::config(
            "α_i range needs min ≤ max and at least one step (two when min < max)",
        ));
    }
    let mut table = Table::new(&["alpha_i", "probability", "numeric"]).with_meta(&meta);
    for i in 0..a.alpha_i_steps {
        let ai = if a.alpha_i_steps == 1 {
            low
        } else {
            low + (high - low) * i as f64 / (a.alpha_i_steps - 1) as f64
        };
        let alpha = amplitude(a.alpha_r, ai)?;
        coherent_state(alpha, &grid)?.check_truncation(TRUNCATION_TOLERANCE)?;
        let closed = negativity_probability(alpha);
        let numeric = negativity_probability_numeric(alpha, &grid)?;
        table.push(vec![Cell::Num(ai), Cell::Num(closed), Cell::Num(numeric)])?;
    }
    emit(
        a.out.output.as_deref(),
        &render_table(&table, a.out.format)?,
    )
}

fn emit_field(field: &QuasiprobField, mut meta: Meta, out: &OutputArgs) -> Result<(), Failure> {
    let min = field.min_real();
    push_meta(&mut meta, "kind", field.kind().name());
    push_meta(&mut meta, "min_value", format_float(min));
    let volume = field.negativity_volume().ok();
    if let Some(v) = volume {
        push_meta(&mut meta, "negativity_volume", format_float(v));
    }
    let bytes = match out.format {
        io_format @ (Format::Csv | Format::Json) => {
            render_table(&io::field_table(field).with_meta(&meta), io_format)?
        }
        Format::Binary => io::write_field_binary(field, &meta),
    };
    emit(out.output.as_deref(), &bytes)?;
    let to_stdout = is_stdout(out.output.as_deref());
    report(to_stdout, &format!("min value: {}", format_float(min)));
    if let Some(v) = volume {
        report(
            to_stdout,
            &format!("negativity volume: {}", format_float(v)),
        );
    }
    Ok(())
}

fn fig2(a: Fig2Args, meta: Meta) -> Result<(), Failure> {
    let grid = build_grid(a.grid.q_min, a.grid.q_max, a.grid.points)?;
    let state = build_state(
        &StateArgs {
            alpha_r: a.alpha_r,
            alpha_i: a.alpha_i,
            fock: None,
        },
        &grid,
    )?;
    emit_field(&quasiprob::margenau_hill(&state), meta, &a.out)
}

fn quasiprob(a: QuasiprobArgs, meta: Meta) -> Result<(), Failure> {
    let grid = build_grid(a.grid.q_min, a.grid.q_max, a.grid.points)?;
    let state = build_state(&a.state, &grid)?;
    let field = match a.kind {
        FieldChoice::Standard => quasiprob::standard_ordered(&state),
        FieldChoice::Kirkwood => quasiprob::kirkwood(&state),
        FieldChoice::MargenauHill => quasiprob::margenau_hill(&state),
        FieldChoice::Wigner => quasiprob::wigner(&state),
    };
    emit_field(&field, meta, &a.out)
}

fn simulate_quantum(a: SimulateArgs, mut meta: Meta) -> Result<(), Failure> {
    let grid = build_grid(a.grid.q_min, a.grid.q_max, a.grid.points)?;
    let object = build_state(&a.state, &grid)?;
    let obs = observable(&a.obs)?;
    let epsilon = check_epsilon(a.epsilon)?;
    let pointer = build_pointer(&a.pointer)?;
    let joint = measurement::evolve_joint(&object, &pointer, &obs, epsilon)?;
    let profile = weak_value(&obs, &object)?;
    let weakness = measurement::weakness_ratio(epsilon, &profile, &pointer);
    push_meta(&mut meta, "pointer_sigma", format_float(pointer.sigma()));
    push_meta(
        &mut meta,
        "neglected_tail_mass",
        format_float(joint.neglected_tail_mass()),
    );
    push_meta(
        &mut meta,
        "max_weakness_ratio",
        format_float(weakness.max_ratio()),
    );
    push_meta(
        &mut meta,
        "weakness_threshold",
        format_float(weakness.threshold),
    );
    push_meta(
        &mut meta,
        "flagged_fraction",
        format_float(weakness.flagged_fraction()),
    );

    let bytes = match a.out.format {
        Format::Binary => io::write_joint_binary(&joint, &meta),
        format => {
            let means = joint.conditional_pointer_means();
            let mut table =
                Table::new(&["q", "mean_Q", "shift", "eps_times_cw", "weakness", "valid"])
                    .with_meta(&meta);
            for k in 0..grid.len() {
                let mean = means[k].unwrap_or(f64::NAN);
                let cw = profile.values()[k].re;
                table.push(vec![
                    Cell::Num(grid.q(k)),
                    Cell::Num(mean),
                    Cell::Num(mean - joint.pointer_mean()),
                    Cell::Num(epsilon * cw),
                    Cell::Num(weakness.ratio[k].unwrap_or(f64::NAN)),
                    Cell::Int((means[k].is_some() && profile.valid_mask()[k]) as i64),
                ])?;
            }
            render_table(&table, format)?
        }
    };
    emit(a.out.output.as_deref(), &bytes)?;
    if let Some(path) = a.slices_output.as_deref() {
        let slices = io::joint_slices_table(&joint, &a.slices).with_meta(&meta);
        let format = if a.out.format == Format::Binary {
            Format::Csv
        } else {
            a.out.format
        };
        emit(Some(path), &render_table(&slices, format)?)?;
    }
    let to_stdout = is_stdout(a.out.output.as_deref());
    for q in &a.slices {
        if let Ok(mean) = joint.conditional_pointer_mean(*q) {
            report(
                to_stdout,
                &format!("<Q> at q={}: {}", format_float(*q), format_float(mean)),
            );
        }
    }
    if weakness.any_flagged() {
        eprintln!(
            "warning: |eps Re c_w|/sigma exceeds {} on {:.1}% of the valid grid",
            weakness.threshold,
            100.0 * weakness.flagged_fraction()
        );
    }
    Ok(())
}

fn simulate_classical(a: SimulateArgs, mut meta: Meta) -> Result<(), Failure> {
    if a.state.fock.is_some() {
        return Err(Failure {
            code: 3,
            message:
                "Fock states have no nonnegative phase-space density for the classical simulation"
                    .into(),
        });
    }
    if a.pointer.pointer != PointerShape::Gaussian {
        return Err(Failure::config(
            "the classical simulation supports the gaussian pointer only",
        ));
    }
    if a.samples == 0 || a.samples > 1_000_000_000 {
        return Err(Failure::config("--samples must lie in [1, 1e9]"));
    }
    let epsilon = check_epsilon(a.epsilon)?;
    let (ar, ai) = (
        finite("alpha-r", a.state.alpha_r)?,
        finite("alpha-i", a.state.alpha_i)?,
    );
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let object = PhaseSpaceDensity::gaussian(ar, ai, s, s)?;
    let sigma = a.pointer.sigma;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Failure::config(format!(
            "--sigma must be positive, got {sigma}"
        )));
    }
    let pointer = PhaseSpaceDensity::gaussian_pointer(
        sigma,
        finite("pointer-drift", a.pointer.pointer_drift)?,
    )?;
    let c = PhaseSpaceObservable::from_name(&a.obs)
        .map_err(|_| Failure::config(format!("unknown observable `{}`", a.obs)))?;
    let initial = classical::sample_product_state(&object, &pointer, a.samples, a.seed)?;
    let kicked = classical::apply_kick(&initial, &c, epsilon)?;
    let base = Binning::default_for(&object);
    let binning = Binning::new(base.low, base.high, a.bins)?;
    let reference = |q: f64| {
        classical::classical_weak_value(&c, &object, q).map_or(f64::NAN, |cw| epsilon * cw)
    };
    let stats = classical::conditional_mean_pointer(&kicked, &binning, Some(&reference));
    let negative = stats
        .iter()
        .filter(|s| !s.empty && s.mean_pointer_q < -3.0 * s.stderr)
        .count();
    push_meta(&mut meta, "significantly_negative_bins", negative);
    let table = io::bin_table(&stats).with_meta(&meta);
    emit(
        a.out.output.as_deref(),
        &render_table(&table, a.out.format)?,
    )?;
    if let Some(path) = a.ensemble_output.as_deref() {
        let format = if a.out.format == Format::Binary {
            Format::Csv
        } else {
            a.out.format
        };
        emit(
            Some(path),
            &render_table(&io::ensemble_table(&kicked).with_meta(&meta), format)?,
        )?;
    }
    report(
        is_stdout(a.out.output.as_deref()),
        &format!("bins with conditional mean below -3 stderr: {negative}"),
    );
    Ok(())
}

fn convergence(a: ConvergenceArgs, mut meta: Meta) -> Result<(), Failure> {
    let grid = build_grid(a.grid.q_min, a.grid.q_max, a.grid.points)?;
    let object = build_state(&a.state, &grid)?;
    let obs = observable(&a.obs)?;
    for e in &a.epsilons {
        check_epsilon(*e)?;
    }
    let pointer = build_pointer(&a.pointer)?;
    let study = measurement::shift_convergence_study(&object, &pointer, &obs, &a.epsilons)?;
    let ratios: Vec<String> = study
        .rows
        .iter()
        .filter_map(|r| r.ratio_to_prev.map(format_float))
        .collect();
    push_meta(&mut meta, "ratios", ratios.join(","));
    let table = io::convergence_table(&study).with_meta(&meta);
    emit(
        a.out.output.as_deref(),
        &render_table(&table, a.out.format)?,
    )?;
    if study.rows.iter().any(|r| r.weakness_violated) {
        eprintln!("warning: some couplings leave the weak regime");
    }
    Ok(())
}
