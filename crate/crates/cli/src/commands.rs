use crate::output::{write_csv, write_json};
use crate::range::{parse_range, parse_usize_range};
use crate::*;
use serde_json::{json, Value};
use std::path::Path;
use tumulab::acceptance::{run_checks, Level, Tolerances};
use tumulab::channel::{
    bsc_curve, classical_channel_lautum, classical_channel_tumula, classical_channel_umlaut, cq_tumula, cq_umlaut,
    parse_channel, quantum_channel_tumula, Channel,
};
use tumulab::hypothesis::{
    achievability_test, classical_np_beta, direct_formula, empirical_exponent, quantum_np_beta, reverse_direct_formula,
    sanov_bounds, zero_rate_limit,
};
use tumulab::io::{parse_matrix, parse_state, parse_table};
use tumulab::measures::{
    alpha_sweep, lautum_information, mutual_information, prli, prmi, prmi_sweep, thresholds, tumula_information,
    umlaut_information,
};
use tumulab::{BipartiteState, ChannelOptions, DensityMatrix, Error, ErrorClass, ExponentQuery, FormulaKind, Variant};

/// A failed command: message plus the class that picks the exit code.
#[derive(Debug)]
pub struct Failure {
    pub class: ErrorClass,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Input, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self { class: e.class(), message: e.to_string() }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<BipartiteState, Failure> {
    Ok(parse_state(&read(path)?)?)
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, Failure> {
    serde_json::to_value(x).map_err(|e| Failure::input(e.to_string()))
}

fn with_fields(mut v: Value, fields: Value) -> Value {
    if let (Value::Object(o), Value::Object(extra)) = (&mut v, fields) {
        o.extend(extra);
    }
    v
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Measure(a) => measure(a),
        Command::Sweep(a) => sweep(a),
        Command::Channel(a) => channel(a),
        Command::BscCurve(a) => bsc(a),
        Command::Exponent(a) => exponent(a),
        Command::Hyptest(a) => hyptest(a.mode),
        Command::Verify(a) => verify(a),
    }
}

fn need_variant(v: Option<VariantArg>, what: &str) -> Result<Variant, Failure> {
    v.map(Variant::from).ok_or_else(|| Failure::input(format!("--variant is required for {what}")))
}

fn need_alpha(a: Option<f64>, what: &str) -> Result<f64, Failure> {
    a.ok_or_else(|| Failure::input(format!("--alpha is required for {what}")))
}

fn measure(a: MeasureArgs) -> Outcome {
    let state = load_state(&a.input)?;
    let opts = a.solver.options()?;
    let name = a.measure.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default();
    let mut extra = json!({ "command": "measure", "measure": name, "dims": [state.da, state.db] });
    let result = match a.measure {
        StateMeasure::Mutual => json!({ "value": mutual_information(&state), "converged": true, "iterations": 0 }),
        StateMeasure::Lautum => to_value(&lautum_information(&state)?)?,
        StateMeasure::Umlaut => to_value(&umlaut_information(&state)?)?,
        StateMeasure::Tumula => to_value(&tumula_information(&state, &opts)?)?,
        StateMeasure::Prli | StateMeasure::Prmi => {
            let variant = need_variant(a.variant, &name)?;
            let alpha = need_alpha(a.alpha, &name)?;
            extra["variant"] = to_value(&variant)?;
            extra["alpha"] = json!(alpha);
            let r = if a.measure == StateMeasure::Prli {
                prli(&state, variant, alpha, &opts)?
            } else {
                prmi(&state, variant, alpha, &opts)?
            };
            to_value(&r)?
        }
    };
    write_json(with_fields(result, extra), a.out.output.as_deref())?;
    Ok(0)
}

fn sweep(a: SweepArgs) -> Outcome {
    let state = load_state(&a.input)?;
    let opts = a.solver.options()?;
    let alphas = parse_range(&a.alpha)?;
    let variant = Variant::from(a.variant);
    let curve = match a.measure {
        CurveArg::Prli => alpha_sweep(&state, variant, &alphas, &opts)?,
        CurveArg::Prmi => prmi_sweep(&state, variant, &alphas, &opts)?,
    };
    let out = a.out.output.as_deref();
    match a.format {
        Format::Json => write_json(with_fields(to_value(&curve)?, json!({ "command": "sweep" })), out)?,
        Format::Csv => {
            let rows: Vec<Vec<f64>> = curve.alphas.iter().zip(&curve.values).map(|(&x, &v)| vec![x, v]).collect();
            write_csv(&["alpha", "value"], &rows, out)?
        }
    }
    Ok(0)
}

fn channel(a: ChannelArgs) -> Outcome {
    let ch = parse_channel(&read(&a.input)?)?;
    let opts = ChannelOptions { restarts: a.restarts, seed: a.seed, outer_grid: !a.no_grid, ..ChannelOptions::default() };
    let (kind, result) = match (&ch, a.measure) {
        (Channel::Classical(w), ChannelMeasure::Umlaut) => ("classical", classical_channel_umlaut(w, &opts)),
        (Channel::Classical(w), ChannelMeasure::Lautum) => ("classical", classical_channel_lautum(w, &opts)),
        (Channel::Classical(w), ChannelMeasure::Tumula) => ("classical", classical_channel_tumula(w, &opts)?),
        (Channel::Cq(c), ChannelMeasure::Umlaut) => ("cq", cq_umlaut(c, &opts)),
        (Channel::Cq(c), ChannelMeasure::Tumula) => ("cq", cq_tumula(c, &opts)?),
        (Channel::Quantum(q), ChannelMeasure::Tumula) => ("quantum", quantum_channel_tumula(q, &opts)?),
        (_, m) => {
            let kind = match ch {
                Channel::Cq(_) => "cq",
                _ => "quantum",
            };
            return Err(Failure::input(format!("{m:?} information is not available for {kind} channels").to_lowercase()));
        }
    };
    let name = a.measure.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default();
    let extra = json!({ "command": "channel", "type": kind, "measure": name });
    write_json(with_fields(to_value(&result)?, extra), a.out.output.as_deref())?;
    Ok(0)
}

fn bsc(a: BscArgs) -> Outcome {
    let eps = parse_range(&a.eps)?;
    let rows = bsc_curve(&eps, &ChannelOptions::default())?;
    let out = a.out.output.as_deref();
    match a.format {
        Format::Json => write_json(json!({ "command": "bsc-curve", "rows": to_value(&rows)? }), out)?,
        Format::Csv => {
            let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.eps, r.umlaut, r.tumula, r.lautum, r.q_star]).collect();
            write_csv(&["eps", "umlaut", "tumula", "lautum", "q_star"], &table, out)?
        }
    }
    Ok(0)
}

/// Orders `0.01, 0.02, ..., 0.99` sampled for exponent formulas.
fn formula_grid() -> Vec<f64> {
    (1..100).map(|k| k as f64 / 100.0).collect()
}

fn exponent(a: ExponentArgs) -> Outcome {
    if a.rate.is_none() && !a.zero_rate {
        return Err(Failure::input("give --rate, --zero-rate or both"));
    }
    let state = load_state(&a.input)?;
    let opts = a.solver.options()?;
    let variant = Variant::from(a.variant);
    let kind = match a.kind {
        KindArg::Direct => FormulaKind::Direct,
        KindArg::Reverse => FormulaKind::Reverse,
    };
    let grid = formula_grid();
    let curve = match kind {
        FormulaKind::Reverse => alpha_sweep(&state, variant, &grid, &opts)?,
        FormulaKind::Direct => prmi_sweep(&state, variant, &grid, &opts)?,
    };
    let eval = |s: f64| -> f64 {
        let r = match kind {
            FormulaKind::Reverse => prli(&state, variant, s, &opts),
            FormulaKind::Direct => prmi(&state, variant, s, &opts),
        };
        r.map_or(f64::NAN, |m| m.value.value())
    };
    let (th, tumula) = if variant == Variant::Doubly {
        let th = thresholds(&state, &opts)?;
        let t = match kind {
            FormulaKind::Reverse => Some(tumula_information(&state, &opts)?.value.value()),
            FormulaKind::Direct => None,
        };
        (Some(th), t)
    } else {
        (None, None)
    };
    let mut out = json!({
        "command": "exponent",
        "kind": to_value(&kind)?,
        "variant": to_value(&variant)?,
        "thresholds": to_value(&th)?,
        "tumula": tumula,
    });
    if let Some(rate) = a.rate {
        let q = ExponentQuery { family: variant, rate, curve: curve.clone(), thresholds: th, tumula };
        let f = match kind {
            FormulaKind::Reverse => reverse_direct_formula(&q, Some(&eval))?,
            FormulaKind::Direct => direct_formula(&q, Some(&eval))?,
        };
        out["rate"] = json!(rate);
        out["formula"] = to_value(&f)?;
    }
    if a.zero_rate {
        out["zero_rate"] = to_value(&zero_rate_limit(&curve, kind, th, Some(&eval))?)?;
    }
    write_json(out, a.out.output.as_deref())?;
    Ok(0)
}

fn load_distribution(path: &Path) -> Result<Vec<f64>, Failure> {
    Ok(parse_table(&read(path)?)?.2)
}

fn load_density(path: &Path) -> Result<DensityMatrix, Failure> {
    Ok(DensityMatrix::new(parse_matrix(&read(path)?)?.0)?)
}

fn hyptest(mode: HyptestMode) -> Outcome {
    match mode {
        HyptestMode::Classical { null, alt, n, eps, out } => {
            let (p, q) = (load_distribution(&null)?, load_distribution(&alt)?);
            let beta = classical_np_beta(&p, &q, n, eps)?;
            let v = json!({
                "command": "hyptest", "mode": "classical", "n": n, "eps": eps,
                "beta": beta, "exponent": tumulab::io::f64_or_inf_json(-beta.ln() / n as f64),
            });
            write_json(v, out.output.as_deref())?;
        }
        HyptestMode::Quantum { null, alt, n, eps, out } => {
            let (rho, sigma) = (load_density(&null)?, load_density(&alt)?);
            let beta = quantum_np_beta(&rho, &sigma, n, eps)?;
            let v = json!({
                "command": "hyptest", "mode": "quantum", "n": n, "eps": eps,
                "beta": beta, "exponent": tumulab::io::f64_or_inf_json(-beta.ln() / n as f64),
            });
            write_json(v, out.output.as_deref())?;
        }
        HyptestMode::Trend { null, alt, rate, n, format, out } => {
            if !(rate > 0.0) {
                return Err(Failure::input(format!("rate {rate} must be positive")));
            }
            let (p, q) = (load_distribution(&null)?, load_distribution(&alt)?);
            let ns = parse_usize_range(&n)?;
            let points = ns
                .iter()
                .map(|&n| Ok((n, classical_np_beta(&p, &q, n, (-(n as f64) * rate).exp())?)))
                .collect::<Result<Vec<_>, Failure>>()?;
            let out = out.output.as_deref();
            match format {
                Format::Json => {
                    let emp = if points.len() >= 3 { Some(empirical_exponent(&points)?) } else { None };
                    let betas: Vec<f64> = points.iter().map(|p| p.1).collect();
                    let v = json!({
                        "command": "hyptest", "mode": "trend", "rate": rate,
                        "ns": ns, "betas": betas, "empirical": to_value(&emp)?,
                    });
                    write_json(v, out)?;
                }
                Format::Csv => {
                    let rows: Vec<Vec<f64>> =
                        points.iter().map(|&(n, b)| vec![n as f64, b, -b.ln() / n as f64]).collect();
                    write_csv(&["n", "beta", "slope"], &rows, out)?;
                }
            }
        }
        HyptestMode::Achievability { input, n, rate, s, seed, out } => {
            let state = load_state(&input)?;
            let rec = achievability_test(&state, n, rate, s, seed)?;
            let extra = json!({
                "command": "hyptest", "mode": "achievability",
                "type1_holds": rec.type1_holds(1e-12), "type2_holds": rec.type2_holds(1e-12),
            });
            write_json(with_fields(to_value(&rec)?, extra), out.output.as_deref())?;
        }
        HyptestMode::Sanov { input, eps, n, solver, out } => {
            let state = load_state(&input)?;
            let b = sanov_bounds(&state, eps, n, &solver.options()?)?;
            let extra = json!({ "command": "hyptest", "mode": "sanov" });
            write_json(with_fields(to_value(&b)?, extra), out.output.as_deref())?;
        }
    }
    Ok(0)
}

fn verify(a: VerifyArgs) -> Outcome {
    let level = match a.level {
        LevelArg::Fast => Level::Fast,
        LevelArg::Full => Level::Full,
    };
    if let Some(bad) = a.only.iter().find(|&&k| k == 0 || k > 13) {
        return Err(Failure::input(format!("no check numbered {bad} (valid 1..=13)")));
    }
    let outcomes = run_checks(level, &Tolerances::default(), &a.only);
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("{:02} {}", o.id, o.name)).collect();
    let total: f64 = outcomes.iter().map(|o| o.seconds).sum();
    if failed.is_empty() {
        println!("{} of {} checks passed in {total:.1}s", outcomes.len(), outcomes.len());
        Ok(0)
    } else {
        println!("{} of {} checks failed: {}", failed.len(), outcomes.len(), failed.join(", "));
        Ok(2)
    }
}
