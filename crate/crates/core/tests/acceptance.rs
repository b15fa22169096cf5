//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use stacktab::fiber::DEFAULT_NODE_CAP;
use stacktab::fit::g2_statistic;
use stacktab::walk::SparseMoves;
use stacktab::{
    chi_square_sf, check_connectivity, common_model_test, enumerate_fiber, exact_pvalue,
    exact_pvalue_enumeration, fit, g2_gof, g2_nested, gof_test, markov_basis, mh_step, nested_df,
    qi_markov_basis, qs_markov_basis, Alternative, BaseModel, ChainState, FiberF64, FitResultF64,
    FixedCells, ModelSpec, Move, StackedTable, Stacking, WalkConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn spec(base: BaseModel, stacking: Stacking, n: usize, h: usize) -> ModelSpec {
    ModelSpec::new(base, stacking, n, h).unwrap()
}

fn c1_basis_counts() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (n, want) in [(5, 1004), (4, 200)] {
        let start = Instant::now();
        let got = markov_basis(&spec(BaseModel::QuasiSymmetry, Stacking::M0, n, 2))
            .unwrap()
            .len();
        let took = start.elapsed();
        pass &= got == want && took < Duration::from_secs(1);
        parts.push(format!("I={n}: {got} moves (want {want}, {took:.2?})"));
    }
    outcome(pass, parts.join("; "))
}

fn c2_three_by_three() -> Outcome {
    let want = Move::new(3, 1, vec![0, 1, -1, -1, 0, 1, 1, -1, 0])
        .unwrap()
        .sign_normalized();
    let qs = qs_markov_basis(3).unwrap();
    let qi = qi_markov_basis(3, &FixedCells::diagonal(3)).unwrap();
    let one = |b: &stacktab::MarkovBasis| b.len() == 1 && b.moves()[0].sign_normalized() == want;
    outcome(
        one(&qs) && one(&qi),
        format!("QS(3) {} move(s), QI(3) {} move(s), both ±(0,1,-1; -1,0,1; 1,-1,0): {}", qs.len(), qi.len(), one(&qs) && one(&qi)),
    )
}

fn layer_g2(t: &StackedTable, h: usize) -> f64 {
    let layer = t.layer(h).unwrap();
    let a = BaseModel::QuasiSymmetry.matrix(t.size()).unwrap();
    let f: FitResultF64 = fit(&a, layer.counts()).unwrap();
    g2_gof(layer.counts(), &f).unwrap().statistic
}

fn nested_g2(t: &StackedTable) -> f64 {
    let s0 = spec(BaseModel::QuasiSymmetry, Stacking::M0, t.size(), t.layers());
    let s1 = spec(BaseModel::QuasiSymmetry, Stacking::M1, t.size(), t.layers());
    let f0: FitResultF64 = fit(&s0.matrix().unwrap(), t.counts()).unwrap();
    let f1: FitResultF64 = fit(&s1.matrix().unwrap(), t.counts()).unwrap();
    g2_nested(t.counts(), &f0, &f1).unwrap().statistic
}

fn c3_g2_values() -> Outcome {
    let start = Instant::now();
    let rater = common::fixture("rater_agreement.csv");
    let mobility = common::fixture("social_mobility.csv");
    let checks = [
        ("rater layer 1", layer_g2(&rater, 1), 1.578, 0.001),
        ("rater layer 2", layer_g2(&rater, 2), 4.303, 0.001),
        ("rater nested", nested_g2(&rater), 30.589, 0.005),
        ("mobility layer 1", layer_g2(&mobility, 1), 6.703, 0.001),
        ("mobility layer 2", layer_g2(&mobility, 2), 8.279, 0.001),
        ("mobility nested", nested_g2(&mobility), 112.687, 0.005),
    ];
    let took = start.elapsed();
    let mut pass = took < Duration::from_secs(5);
    let parts: Vec<String> = checks
        .iter()
        .map(|(name, got, want, tol)| {
            let ok = close(*got, *want, *tol);
            pass &= ok;
            format!("{name} {got:.3} (want {want}±{tol}{})", if ok { "" } else { " MISS" })
        })
        .collect();
    outcome(pass, format!("{} [{took:.2?}]", parts.join(", ")))
}

fn c4_degrees_of_freedom() -> Outcome {
    let df = |n| {
        nested_df(
            &spec(BaseModel::QuasiSymmetry, Stacking::M0, n, 2),
            &spec(BaseModel::QuasiSymmetry, Stacking::M1, n, 2),
        )
        .unwrap()
    };
    let layer = |n: usize| {
        let a = BaseModel::QuasiSymmetry.matrix(n).unwrap();
        n * n - a.rank()
    };
    let (d5, d4, l4, l5) = (df(5), df(4), layer(4), layer(5));
    outcome(
        d5 == 18 && d4 == 12 && l4 == 3 && l5 == 6,
        format!("nested I=5 {d5} (18), I=4 {d4} (12); per layer I=4 {l4} (3), I=5 {l5} (6; printed 7 in the source is a known discrepancy)"),
    )
}

fn c5_exact_pvalues() -> Outcome {
    let start = Instant::now();
    let cfg = WalkConfig::default();
    let rater = common::fixture("rater_agreement.csv");
    let mobility = common::fixture("social_mobility.csv");
    let gof = |t: &StackedTable, h| gof_test(&t.layer(h).unwrap(), BaseModel::QuasiSymmetry, &cfg).unwrap().p_exact;
    let nested = |t: &StackedTable| common_model_test(t, BaseModel::QuasiSymmetry, &cfg).unwrap().p_exact;
    let checks = [
        ("rater layer 1", gof(&rater, 1), 0.912),
        ("rater layer 2", gof(&rater, 2), 0.791),
        ("rater nested", nested(&rater), 0.029),
        ("mobility layer 1", gof(&mobility, 1), 0.051),
        ("mobility layer 2", gof(&mobility, 2), 0.088),
    ];
    let mut pass = true;
    let mut parts: Vec<String> = checks
        .iter()
        .map(|(name, got, want)| {
            let ok = close(*got, *want, 0.02);
            pass &= ok;
            format!("{name} {got:.3} (want {want}±0.02{})", if ok { "" } else { " MISS" })
        })
        .collect();
    let p = nested(&mobility);
    pass &= p < 0.001;
    parts.push(format!("mobility nested {p:.3} (want <0.001)"));
    let took = start.elapsed();
    pass &= took < Duration::from_secs(600);
    outcome(pass, format!("seed {}: {} [{took:.1?}]", cfg.seed, parts.join(", ")))
}

fn c6_asymptotic_tail() -> Outcome {
    let p = chi_square_sf(112.687_f64, 12);
    outcome(p < 1e-15, format!("chi_square_sf(112.687, 12) = {p:.3e} (want < 1e-15)"))
}

fn c7_connectivity() -> Outcome {
    let mut rng = common::rng(2024);
    let mut checked = 0;
    let mut nontrivial = 0;
    let mut failures = Vec::new();
    for base in [BaseModel::QuasiIndependence, BaseModel::QuasiSymmetry] {
        for n in [3, 4] {
            let mut specs = vec![ModelSpec::single(base, n).unwrap()];
            specs.extend([Stacking::M0, Stacking::M1, Stacking::M2].map(|s| spec(base, s, n, 2)));
            for sp in specs {
                let a = sp.matrix().unwrap();
                let basis = markov_basis(&sp).unwrap();
                for t in 0..200 {
                    let total = 1 + (t as u64 % 8);
                    let mut counts = common::random_table(&mut rng, n, sp.layers, total).counts().to_vec();
                    if t % 2 == 1 {
                        // seat the positive part of a move so the fiber is not a singleton
                        let m = &basis.moves()[rng.random_range(0..basis.len())];
                        let plus: u64 = m.entries().iter().map(|&v| v.max(0) as u64).sum();
                        counts = common::random_table(&mut rng, n, sp.layers, total.saturating_sub(plus))
                            .counts()
                            .iter()
                            .zip(m.entries())
                            .map(|(&c, &v)| c + v.max(0) as u64)
                            .collect();
                    }
                    let table = StackedTable::new(n, sp.layers, counts).unwrap();
                    let fiber: FiberF64 = enumerate_fiber(&a, &table, DEFAULT_NODE_CAP).unwrap();
                    nontrivial += usize::from(fiber.len() > 1);
                    checked += 1;
                    if !check_connectivity(&fiber, &basis) {
                        failures.push(format!("{}/{}/I={n}", sp.base, sp.stacking));
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{checked} fibers over 16 models ({nontrivial} with ≥2 members), {} disconnected {:?}", failures.len(), failures.iter().take(3).collect::<Vec<_>>()),
    )
}

fn oracle(sp: &ModelSpec) -> Vec<Vec<i64>> {
    match sp.stacking {
        Stacking::Single => common::oracle_base(sp.base, sp.size),
        Stacking::M0 => common::oracle_stacked(sp.base, sp.size, sp.layers, 0),
        Stacking::M1 => common::oracle_stacked(sp.base, sp.size, sp.layers, 1),
        Stacking::M2 => common::oracle_stacked(sp.base, sp.size, sp.layers, 2),
    }
}

fn c8_kernel() -> Outcome {
    let mut moves = 0;
    let mut bad = 0;
    let mut models = 0;
    for base in [BaseModel::Independence, BaseModel::QuasiIndependence, BaseModel::QuasiSymmetry] {
        for n in base.min_size()..=8 {
            let mut specs = vec![ModelSpec::single(base, n).unwrap()];
            for h in 2..=3 {
                if n <= 5 || (n <= 6 && h == 2) {
                    specs.push(spec(base, Stacking::M0, n, h));
                    specs.push(spec(base, Stacking::M1, n, h));
                }
            }
            if n <= 5 {
                specs.push(spec(base, Stacking::M2, n, 2));
            }
            for sp in specs {
                let ora = oracle(&sp);
                for m in markov_basis(&sp).unwrap().moves() {
                    moves += 1;
                    bad += usize::from(common::apply_transpose(&ora, m.entries()).iter().any(|&v| v != 0));
                }
                models += 1;
            }
        }
    }
    outcome(bad == 0, format!("{moves} moves over {models} models, {bad} outside the kernel"))
}

fn stationarity_cases() -> Vec<(ModelSpec, StackedTable)> {
    vec![
        (
            ModelSpec::single(BaseModel::Independence, 3).unwrap(),
            StackedTable::new(3, 1, vec![2, 0, 1, 0, 2, 0, 1, 0, 1]).unwrap(),
        ),
        (
            ModelSpec::single(BaseModel::QuasiIndependence, 4).unwrap(),
            StackedTable::new(4, 1, vec![1, 2, 0, 1, 0, 2, 1, 0, 1, 0, 0, 2, 1, 1, 0, 1]).unwrap(),
        ),
        (
            spec(BaseModel::QuasiSymmetry, Stacking::M0, 3, 2),
            StackedTable::new(3, 2, vec![1, 2, 0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, 1]).unwrap(),
        ),
    ]
}

fn c9_stationarity() -> Outcome {
    const STEPS: usize = 100_000;
    const BATCHES: usize = 50;
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, (sp, table)) in stationarity_cases().into_iter().enumerate() {
        let a = sp.matrix().unwrap();
        let fiber: FiberF64 = enumerate_fiber(&a, &table, DEFAULT_NODE_CAP).unwrap();
        let basis = markov_basis(&sp).unwrap();
        let moves = SparseMoves::from(&basis);
        let mut rng = WalkConfig::with_seed(100 + n as u64).rng(0);
        let mut state = ChainState::new(&table);
        for _ in 0..10_000 {
            mh_step(&mut state, &moves, &mut rng);
        }
        let per = STEPS / BATCHES;
        let mut counts = vec![vec![0usize; fiber.len()]; BATCHES];
        for batch in counts.iter_mut() {
            for _ in 0..per {
                mh_step(&mut state, &moves, &mut rng);
                batch[fiber.index_of(state.table()).expect("chain stays in its fiber")] += 1;
            }
        }
        let mut worst: f64 = 0.0;
        for (i, &w) in fiber.weights().iter().enumerate() {
            let means: Vec<f64> = counts.iter().map(|b| b[i] as f64 / per as f64).collect();
            let mean = means.iter().sum::<f64>() / BATCHES as f64;
            let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
            let se = (var / BATCHES as f64).sqrt().max((w * (1.0 - w) / STEPS as f64).sqrt());
            worst = worst.max((mean - w).abs() / se);
        }
        let null: FitResultF64 = fit(&a, table.counts()).unwrap();
        let exact = exact_pvalue_enumeration(&fiber, |m| g2_statistic(m, &null.fitted));
        let cfg = WalkConfig { burn_in: 5_000, thinning: 10, ..WalkConfig::with_seed(n as u64) };
        let mc = exact_pvalue(&table, &sp, Alternative::Saturated, &basis, &cfg).unwrap().p_exact;
        let ok = worst <= 4.0 && (mc - exact).abs() < 0.02 && (2..=500).contains(&fiber.len());
        pass &= ok;
        parts.push(format!(
            "{}/{} |fiber| {}: max dev {worst:.2} SE, p {mc:.3} vs {exact:.3}",
            sp.base,
            sp.stacking,
            fiber.len()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c10_mle() -> Outcome {
    let mut rng = common::rng(99);
    let positive = |rng: &mut rand_chacha::ChaCha8Rng, n: usize, h: usize| {
        let t = common::random_table(rng, n, h, 30 * (n * n * h) as u64);
        t.counts().iter().map(|c| c + 1).collect::<Vec<u64>>()
    };
    let mut stat_gap: f64 = 0.0;
    for (base, s, n, h) in [
        (BaseModel::QuasiSymmetry, Stacking::M0, 4, 2),
        (BaseModel::QuasiIndependence, Stacking::M1, 5, 2),
        (BaseModel::QuasiSymmetry, Stacking::Single, 5, 1),
        (BaseModel::QuasiIndependence, Stacking::M2, 4, 2),
    ] {
        let a = spec(base, s, n, h).matrix().unwrap();
        let counts = positive(&mut rng, n, h);
        let f: FitResultF64 = fit(&a, &counts).unwrap();
        for c in 0..a.cols() {
            let want: f64 = a.support(c).iter().map(|&k| counts[k] as f64).sum();
            let got: f64 = a.support(c).iter().map(|&k| f.fitted[k]).sum();
            stat_gap = stat_gap.max((got - want).abs() / want.max(1.0));
        }
    }

    let counts = positive(&mut rng, 5, 1);
    let f: FitResultF64 = fit(&BaseModel::Independence.matrix(5).unwrap(), &counts).unwrap();
    let total: u64 = counts.iter().sum();
    let mut closed_gap: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let r: u64 = counts[i * 5..i * 5 + 5].iter().sum();
            let c: u64 = (0..5).map(|k| counts[k * 5 + j]).sum();
            let want = r as f64 * c as f64 / total as f64;
            closed_gap = closed_gap.max((f.fitted[i * 5 + j] - want).abs() / want.max(1.0));
        }
    }

    let sym = vec![4u64, 1, 0, 2, 1, 3, 5, 0, 0, 5, 2, 1, 2, 0, 1, 7];
    let f: FitResultF64 = fit(&BaseModel::QuasiSymmetry.matrix(4).unwrap(), &sym).unwrap();
    let in_model = g2_gof(&sym, &f).unwrap().statistic.abs();

    let counts = positive(&mut rng, 4, 2);
    let f0: FitResultF64 = fit(&spec(BaseModel::QuasiSymmetry, Stacking::M0, 4, 2).matrix().unwrap(), &counts).unwrap();
    let f1: FitResultF64 = fit(&spec(BaseModel::QuasiSymmetry, Stacking::M1, 4, 2).matrix().unwrap(), &counts).unwrap();
    let decomposition = (g2_gof(&counts, &f0).unwrap().statistic
        - g2_gof(&counts, &f1).unwrap().statistic
        - g2_nested(&counts, &f0, &f1).unwrap().statistic)
        .abs();

    outcome(
        stat_gap <= 1e-8 && closed_gap <= 1e-10 && in_model < 1e-9 && decomposition <= 1e-6,
        format!(
            "statistic gap {stat_gap:.1e} (≤1e-8), closed form {closed_gap:.1e} (≤1e-10), in-model G² {in_model:.1e}, decomposition {decomposition:.1e} (≤1e-6)"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("basis counts", c1_basis_counts),
        ("3x3 bases", c2_three_by_three),
        ("G² reproduction", c3_g2_values),
        ("degrees of freedom", c4_degrees_of_freedom),
        ("exact p-values", c5_exact_pvalues),
        ("asymptotic tail", c6_asymptotic_tail),
        ("connectivity", c7_connectivity),
        ("kernel", c8_kernel),
        ("stationarity", c9_stationarity),
        ("MLE contracts", c10_mle),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: {} of 10 criteria fail: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
