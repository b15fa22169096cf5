use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use stacktab::fit::g2_statistic;
use stacktab::{
    check_connectivity, enumerate_fiber, exact_pvalue, exact_pvalue_enumeration, fit, g2_gof,
    markov_basis, Alternative, BaseModel, FiberF64, FitResultF64, ModelSpec, Stacking,
    StackedTable, TestResult, WalkConfig,
};

use crate::args::{
    BasisArgs, BasisFormat, EnumerateArgs, FitArgs, Format, InputFlags, MatrixArgs, ModelFlags,
    StackArg, TestArgs,
};
use crate::error::CliError;

/// Rendered command output.
pub struct Output {
    pub text: String,
}

fn spec_from_flags(m: &ModelFlags) -> Result<ModelSpec, CliError> {
    let stacking = Stacking::from(m.stack);
    if stacking == Stacking::M2 && m.layers() > 2 {
        return Err(CliError::Unsupported(format!(
            "H>2 Lawrence lifting (M2 with H={}) is out of scope",
            m.layers()
        )));
    }
    Ok(ModelSpec::new(m.model.into(), stacking, m.size, m.layers())?)
}

fn spec_json(s: &ModelSpec) -> Value {
    json!({
        "model": s.base.to_string(),
        "stack": s.stacking.to_string(),
        "I": s.size,
        "H": s.layers,
    })
}

pub fn basis(args: &BasisArgs) -> Result<Output, CliError> {
    let spec = spec_from_flags(&args.model)?;
    let b = markov_basis(&spec)?;
    let n = b.len();
    let text = match args.format {
        BasisFormat::Matrix => b.to_matrix_text(),
        BasisFormat::Json => {
            let moves: Vec<&[i64]> = b.moves().iter().map(|m| m.entries()).collect();
            pretty(&json!({ "spec": spec_json(&spec), "count": n, "moves": moves }))
        }
        BasisFormat::Text => {
            let noun = if n == 1 { "move" } else { "moves" };
            let mut t = format!("{n} {noun} (2·{n} with signs)\n");
            if args.list {
                t.push_str(&b.to_text());
            }
            t
        }
    };
    Ok(Output { text })
}

pub fn matrix(args: &MatrixArgs) -> Result<Output, CliError> {
    let spec = spec_from_flags(&args.model)?;
    let a = spec.matrix()?;
    let text = match args.format {
        Format::Text => a.to_text(),
        Format::Json => pretty(&json!({
            "spec": spec_json(&spec),
            "rank": a.rank(),
            "labels": a.labels(),
            "rows": a.row_vecs(),
        })),
    };
    Ok(Output { text })
}

struct Loaded {
    table: StackedTable,
    inputs: Vec<Value>,
}

fn load(files: &[impl AsRef<Path>]) -> Result<Loaded, CliError> {
    let mut layers = Vec::new();
    let mut inputs = Vec::new();
    let mut size = None;
    for path in files {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Data(format!("{}: not valid UTF-8", path.display())))?;
        let t = StackedTable::parse_csv(&text)
            .map_err(|e| CliError::from(e).context(&path.display().to_string()))?;
        if *size.get_or_insert(t.size()) != t.size() {
            return Err(CliError::Data(format!(
                "{}: table size {} differs from {}",
                path.display(),
                t.size(),
                size.unwrap_or_default()
            )));
        }
        for h in 1..=t.layers() {
            layers.push(t.layer(h)?);
        }
        inputs.push(json!({
            "path": path.display().to_string(),
            "sha256": hex::encode(Sha256::digest(&bytes)),
        }));
    }
    Ok(Loaded {
        table: StackedTable::from_layers(&layers)?,
        inputs,
    })
}

fn provenance(command: &str, input: &InputFlags, loaded: &Loaded, config: Value) -> Value {
    let mut p = json!({
        "tool": "stacktab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "inputs": loaded.inputs,
        "config": config,
    });
    if !input.deterministic {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        p["timestamp_unix"] = json!(now);
    }
    p
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn default_stack(table: &StackedTable) -> StackArg {
    if table.layers() == 1 {
        StackArg::Single
    } else {
        StackArg::M0
    }
}

/// The whole table, or each layer on its own when a single-table model
/// meets a stacked input.
fn scopes(table: &StackedTable, stacking: Stacking) -> Result<Vec<(String, StackedTable)>, CliError> {
    if stacking == Stacking::Single && table.layers() > 1 {
        (1..=table.layers())
            .map(|h| Ok((format!("layer {h}"), table.layer(h)?.into_stacked())))
            .collect()
    } else {
        Ok(vec![("table".to_string(), table.clone())])
    }
}

fn format_table(values: &[f64], size: usize) -> String {
    let mut out = String::new();
    // blank line between layers
    for (r, row) in values.chunks(size).enumerate() {
        if r > 0 && r % size == 0 {
            out.push('\n');
        }
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>10.3}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn fit_cmd(args: &FitArgs) -> Result<Output, CliError> {
    let loaded = load(&args.input.files)?;
    let base = BaseModel::from(args.input.model);
    let stacking = Stacking::from(args.stack);
    let mut results = Vec::new();
    let mut text = String::new();
    for (scope, t) in scopes(&loaded.table, stacking)? {
        let spec = ModelSpec::new(base, stacking, t.size(), t.layers())?;
        let f: FitResultF64 = fit(&spec.matrix()?, t.counts())?;
        let g = g2_gof(t.counts(), &f)?;
        text.push_str(&format!(
            "{scope}: G² = {:.3}, df {}, asymptotic p = {}{}\n",
            g.statistic,
            g.df,
            g.p_asymptotic.map_or("n/a".into(), |p| format!("{p:.4}")),
            if f.converged {
                String::new()
            } else {
                format!(" (not converged after {} sweeps)", f.iterations)
            }
        ));
        text.push_str(&format_table(&f.fitted, t.size()));
        results.push(json!({
            "scope": scope,
            "spec": spec_json(&spec),
            "g2": g,
            "converged": f.converged,
            "iterations": f.iterations,
            "max_discrepancy": f.max_discrepancy,
            "fitted": f.fitted,
        }));
    }
    render(&args.input, || {
        let config = json!({ "model": base.to_string(), "stack": stacking.to_string() });
        json!({ "provenance": provenance("fit", &args.input, &loaded, config), "results": results })
    }, text)
}

fn render(input: &InputFlags, json: impl FnOnce() -> Value, text: String) -> Result<Output, CliError> {
    Ok(Output {
        text: match input.format {
            Format::Text => text,
            Format::Json => pretty(&json()),
        },
    })
}

fn describe(r: &TestResult) -> String {
    let mut s = format!(
        "G² = {:.3}, df {}\n  exact p     {:.4} (MC se {:.4}, {} samples, seed {})\n  asymptotic  {:.3e}\n  acceptance  {:.3}\n",
        r.statistic, r.df, r.p_exact, r.mc_se, r.samples, r.seed, r.p_asymptotic, r.acceptance_rate
    );
    if r.boundary_samples > 0 {
        s.push_str(&format!("  boundary samples {}\n", r.boundary_samples));
    }
    if r.unconverged_fits > 0 {
        s.push_str(&format!("  unconverged fits {}\n", r.unconverged_fits));
    }
    s
}

pub fn test_cmd(args: &TestArgs) -> Result<Output, CliError> {
    let loaded = load(&args.input.files)?;
    let base = BaseModel::from(args.input.model);
    let null_stack = Stacking::from(args.null.unwrap_or_else(|| default_stack(&loaded.table)));
    let alt = match (args.gof, args.alt) {
        (true, _) => None,
        (false, Some(a)) => Some(Stacking::from(a)),
        (false, None) => {
            return Err(CliError::Usage(
                "choose --gof or an alternative with --alt".into(),
            ))
        }
    };
    if alt == Some(Stacking::Single) {
        return Err(CliError::Usage("the alternative must be a stacked model".into()));
    }
    let cfg = WalkConfig {
        burn_in: args.burn_in,
        thinning: args.thinning,
        samples: args.samples,
        seed: args.seed,
        chains: args.chains,
    };
    let mut results = Vec::new();
    let mut text = String::new();
    for (scope, t) in scopes(&loaded.table, null_stack)? {
        let spec0 = ModelSpec::new(base, null_stack, t.size(), t.layers())?;
        let alternative = match alt {
            None => Alternative::Saturated,
            Some(s) => Alternative::Model(ModelSpec::new(base, s, t.size(), t.layers())?),
        };
        let basis = markov_basis(&spec0)?;
        let r = exact_pvalue(&t, &spec0, alternative, &basis, &cfg)?;
        let against = alt.map_or("saturated".to_string(), |s| format!("{base}/{s}"));
        text.push_str(&format!("{scope}: {base}/{null_stack} vs {against}\n  {}", describe(&r)));
        results.push(json!({ "scope": scope, "null": spec_json(&spec0), "alternative": against, "result": r }));
    }
    render(&args.input, || {
        let config = json!({
            "model": base.to_string(),
            "null": null_stack.to_string(),
            "alt": alt.map_or("saturated".to_string(), |s| s.to_string()),
            "walk": cfg,
        });
        json!({ "provenance": provenance("test", &args.input, &loaded, config), "results": results })
    }, text)
}

pub fn enumerate_cmd(args: &EnumerateArgs) -> Result<Output, CliError> {
    let loaded = load(&args.input.files)?;
    let base = BaseModel::from(args.input.model);
    let stacking = Stacking::from(args.stack.unwrap_or_else(|| default_stack(&loaded.table)));
    let t = &loaded.table;
    let spec = ModelSpec::new(base, stacking, t.size(), t.layers())?;
    let a = spec.matrix()?;
    let fiber: FiberF64 = enumerate_fiber(&a, t, args.cap)?;
    let null: FitResultF64 = fit(&a, t.counts())?;
    let observed = g2_statistic(t.counts(), &null.fitted);
    let p = exact_pvalue_enumeration(&fiber, |m| g2_statistic(m, &null.fitted));
    let connected = match markov_basis(&spec) {
        Ok(b) => Some(check_connectivity(&fiber, &b)),
        Err(stacktab::Error::Unsupported(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let text = format!(
        "fiber size {} ({} search nodes)\nG² = {observed:.3}, exact p = {p:.4}\nconnected by the Markov basis: {}\n",
        fiber.len(),
        fiber.nodes(),
        connected.map_or("n/a".to_string(), |c| c.to_string())
    );
    render(&args.input, || {
        let config = json!({ "spec": spec_json(&spec), "cap": args.cap });
        json!({
            "provenance": provenance("enumerate", &args.input, &loaded, config),
            "fiber_size": fiber.len(),
            "nodes": fiber.nodes(),
            "statistic": observed,
            "p_exact": p,
            "connected": connected,
        })
    }, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_layers_are_separated_by_a_blank_line() {
        let t = format_table(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], 2);
        assert_eq!(t.lines().count(), 5);
        assert_eq!(t.lines().nth(2), Some(""));
    }

    #[test]
    fn single_model_splits_stacked_tables() {
        let t = StackedTable::new(3, 2, (0..18).collect()).unwrap();
        let s = scopes(&t, Stacking::Single).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].1.counts(), &(9..18).collect::<Vec<u64>>()[..]);
        assert_eq!(scopes(&t, Stacking::M0).unwrap().len(), 1);
    }
}
