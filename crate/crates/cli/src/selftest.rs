//! Quick oracle and property checks against an installed build.

use std::time::Instant;

use rand::Rng;
use rvfl_core::{
    derive_stream, eval_target, hidden_output, init_hidden_galpha, init_hidden_gu, pseudoinverse,
    sample_dataset, solve_least_squares, train, wilcoxon_signed_rank, Configuration, InitStrategy,
    Matrix, TargetFunction, Topology, TrainedModel,
};

type Check = fn() -> Result<(), String>;

pub fn run_all() -> bool {
    let checks: [(&str, Check); 7] = [
        ("target functions", targets),
        ("least squares vs normal equations", least_squares),
        ("Moore-Penrose identities", moore_penrose),
        ("Wilcoxon exact vs enumeration", wilcoxon),
        ("anchored sigmoid midpoints", anchors),
        ("hidden-layer prefix property", prefix),
        ("model JSON round trip", json_round_trip),
    ];
    let mut all = true;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = check();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(()) => println!("ok    {name} ({ms:.0} ms)"),
            Err(msg) => {
                all = false;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    all
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn targets() -> Result<(), String> {
    ensure(eval_target(TargetFunction::Nl, &[0.5, 0.5]) == 1.0, || "NL peak".into())?;
    ensure(eval_target(TargetFunction::L, &[1.0, 1.0]) == 6.0, || "L(1, 1)".into())?;
    ensure(eval_target(TargetFunction::Nlf, &[0.0]) == 0.0, || "NLF(0)".into())
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, rank: usize) -> Matrix {
    let l = Matrix::from_fn(rows, rank, |_, _| rng.random_range(-1.0..1.0));
    let r = Matrix::from_fn(rank, cols, |_, _| rng.random_range(-1.0..1.0));
    l.matmul(&r).expect("conformant")
}

/// Solves `AᵀA x = Aᵀy` by Gaussian elimination with partial pivoting.
fn normal_equations(a: &Matrix, y: &[f64]) -> Vec<f64> {
    let p = a.cols();
    let at = a.transpose();
    let ata = at.matmul(a).expect("conformant");
    let aty = at.matvec(y).expect("conformant");
    let mut m: Vec<Vec<f64>> = (0..p).map(|r| {
        let mut row = ata.row(r).to_vec();
        row.push(aty[r]);
        row
    }).collect();
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("nonempty");
        m.swap(col, piv);
        for r in 0..p {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=p {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    (0..p).map(|r| m[r][p] / m[r][r]).collect()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn least_squares() -> Result<(), String> {
    let mut rng = derive_stream(1, &[("selftest-ls", 0)]).rng();
    for case in 0..50 {
        let p = rng.random_range(1..=10);
        let rows = rng.random_range(p..=40);
        let a = random_matrix(&mut rng, rows, p, p);
        let y: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = solve_least_squares(&a, &y).map_err(|e| e.to_string())?;
        let want = normal_equations(&a, &y);
        let err = rel(&got, &want);
        ensure(err < 1e-8, || format!("case {case}: relative error {err:e}"))?;
    }
    Ok(())
}

fn moore_penrose() -> Result<(), String> {
    let mut rng = derive_stream(1, &[("selftest-mp", 0)]).rng();
    for case in 0..50 {
        let rows = rng.random_range(1..=15);
        let cols = rng.random_range(1..=15);
        let rank = rng.random_range(1..=rows.min(cols));
        let m = random_matrix(&mut rng, rows, cols, rank);
        let p = pseudoinverse(&m).map_err(|e| e.to_string())?;
        let mpm = m.matmul(&p).and_then(|x| x.matmul(&m)).map_err(|e| e.to_string())?;
        let pmp = p.matmul(&m).and_then(|x| x.matmul(&p)).map_err(|e| e.to_string())?;
        let e1 = rel(mpm.as_slice(), m.as_slice());
        let e2 = rel(pmp.as_slice(), p.as_slice());
        ensure(e1 < 1e-8 && e2 < 1e-8, || format!("case {case}: {e1:e}, {e2:e}"))?;
    }
    Ok(())
}

fn brute_force_p(diffs: &[f64]) -> f64 {
    let mut nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if nz.is_empty() {
        return 1.0;
    }
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let n = nz.len();
    let ranks: Vec<f64> = (0..n)
        .map(|i| {
            let tied: Vec<usize> = (0..n).filter(|&j| nz[j].abs() == nz[i].abs()).collect();
            tied.iter().map(|&j| (j + 1) as f64).sum::<f64>() / tied.len() as f64
        })
        .collect();
    let plus: f64 = (0..n).filter(|&i| nz[i] > 0.0).map(|i| ranks[i]).sum();
    let w = plus.min(ranks.iter().sum::<f64>() - plus);
    let hits = (0u32..1 << n)
        .filter(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum::<f64>() <= w)
        .count();
    (2.0 * hits as f64 / f64::from(1u32 << n)).min(1.0)
}

fn wilcoxon() -> Result<(), String> {
    let mut rng = derive_stream(1, &[("selftest-wilcoxon", 0)]).rng();
    for case in 0..100 {
        let n = rng.random_range(1..=10);
        let diffs: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(-5i32..=5))).collect();
        let got = wilcoxon_signed_rank(&diffs).map_err(|e| e.to_string())?.p_value;
        let want = brute_force_p(&diffs);
        ensure(got == want, || format!("case {case} {diffs:?}: {got} vs {want}"))?;
    }
    Ok(())
}

fn anchors() -> Result<(), String> {
    let data = sample_dataset(TargetFunction::Nl, 3, 50, 0.0, &derive_stream(1, &[("selftest-anchor", 0)]))
        .map_err(|e| e.to_string())?;
    let topo = Topology::from_configuration(3, 200, Configuration::WithLinksWithBias).map_err(|e| e.to_string())?;
    let mut rng = derive_stream(1, &[("selftest-anchor", 1)]).rng();
    let layers = [
        init_hidden_gu(&topo, 7.0, &data.x, &mut rng),
        init_hidden_galpha(&topo, 15.0, 75.0, &data.x, &mut rng),
    ];
    for layer in layers {
        let layer = layer.map_err(|e| e.to_string())?;
        let h = hidden_output(&layer, &data.x).map_err(|e| e.to_string())?;
        let anchors = layer.anchors.as_ref().ok_or("anchors missing")?;
        for (i, &row) in anchors.iter().enumerate() {
            let v = h.get(row, i);
            ensure((v - 0.5).abs() < 1e-12, || format!("node {i}: {v}"))?;
        }
    }
    Ok(())
}

fn prefix() -> Result<(), String> {
    let data = sample_dataset(TargetFunction::Nlf, 2, 30, 0.0, &derive_stream(1, &[("selftest-prefix", 0)]))
        .map_err(|e| e.to_string())?;
    let big = Topology::from_configuration(2, 40, Configuration::NoLinksNoBias).map_err(|e| e.to_string())?;
    let small = big.with_hidden(9).map_err(|e| e.to_string())?;
    let stream = derive_stream(1, &[("selftest-prefix", 1)]);
    let a = init_hidden_galpha(&big, 0.0, 90.0, &data.x, &mut stream.rng()).map_err(|e| e.to_string())?;
    let b = init_hidden_galpha(&small, 0.0, 90.0, &data.x, &mut stream.rng()).map_err(|e| e.to_string())?;
    ensure(a.truncated(9).map_err(|e| e.to_string())? == b, || "prefix differs".into())
}

fn json_round_trip() -> Result<(), String> {
    let data = sample_dataset(TargetFunction::NlfL, 2, 80, 0.05, &derive_stream(1, &[("selftest-json", 0)]))
        .map_err(|e| e.to_string())?;
    let topo = Topology::from_configuration(2, 12, Configuration::WithLinksNoBias).map_err(|e| e.to_string())?;
    let model = train(&topo, &InitStrategy::Gu { u: 4.0 }, &data, &mut derive_stream(1, &[("selftest-json", 1)]).rng())
        .map_err(|e| e.to_string())?;
    let text = model.to_json(Some(1)).map_err(|e| e.to_string())?;
    let (back, _) = TrainedModel::from_json(&text).map_err(|e| e.to_string())?;
    ensure(back == model, || "reloaded model differs".into())
}
