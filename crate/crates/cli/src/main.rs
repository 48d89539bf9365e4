//! Command-line front end for the state-sum engine.
//!
//! Subcommands:
//! - `tenj`    — evaluate a 10j symbol from ten lengths and ten spins
//! - `verify`  — randomized property suites (lemma, measure, gauge, flatness)
//! - `weight`  — state-sum weight of a triangulation file, with factors
//! - `scan`    — CSV table of 10j values over a spin range
//!
//! Every command is deterministic given its flags; randomness is always
//! seeded. Exit codes: 0 success, 1 data error, 2 usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statesum_core::geometry4d::{simplex_v, EdgeLengthSet, GeomError};
use statesum_core::pachner::{apply_move, flatness_check, MoveSpec};
use statesum_core::so4::{haar_sample, rot12, rot23, ChartRule, Rotation};
use statesum_core::statesum::{format_triangulation, parse_triangulation, weight_report};
use statesum_core::symbols::{
    measure_constant_check, ten_j, ten_j_from_oracle, trace_oracle_with, verify_lemma_oriented,
    GaugeOptions, SymbolError, TenJInput, PENT_EDGES, PENT_TRIANGLES,
};
use statesum_core::vec4::Vec4;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "statesum",
    about = "Euclidean state-sum engine: 10j symbols, weights, verification suites",
    version
)]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

/// Global run configuration; every flag can also be set through the
/// environment with the STATESUM_ prefix.
#[derive(Debug, Args)]
struct RunConfig {
    /// Seed for all randomized operations.
    #[arg(long, global = true, default_value_t = 0, env = "STATESUM_SEED")]
    seed: u64,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 1_000_000, env = "STATESUM_SAMPLES")]
    samples: u64,
    /// Length cutoff L (lengths sampled with measure dl^2 on (0, L^2]).
    #[arg(long, global = true, default_value_t = 1.0, env = "STATESUM_CUTOFF_LENGTH")]
    cutoff_length: f64,
    /// Spin cutoff S (|s| <= S).
    #[arg(long, global = true, default_value_t = 0, env = "STATESUM_CUTOFF_SPIN")]
    cutoff_spin: i64,
    /// Tolerance for verification suites.
    #[arg(long, global = true, default_value_t = 1e-8, env = "STATESUM_TOL")]
    tol: f64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table, env = "STATESUM_FORMAT")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a 10j symbol: ten edge lengths then ten triangle spins.
    ///
    /// Lengths follow the lexicographic edge order 01 02 03 04 12 13 14 23
    /// 24 34 on vertices 0..5; spins follow the lexicographic triangle
    /// order 012 013 014 023 024 034 123 124 134 234.
    Tenj {
        /// Ten edge lengths followed by ten integer spins.
        #[arg(num_args = 20, required = true, allow_negative_numbers = true, value_name = "L1..L10 S1..S10")]
        values: Vec<f64>,
        /// Also evaluate the rotation-trace oracle and print the deviation.
        #[arg(long)]
        oracle: bool,
    },
    /// Run a randomized verification suite.
    Verify {
        /// Suite name.
        suite: Suite,
        /// Number of randomized cases (ignored by `measure`).
        #[arg(default_value_t = 100)]
        cases: u64,
    },
    /// Evaluate the state-sum weight of a triangulation file.
    Weight {
        /// Triangulation file path.
        file: PathBuf,
    },
    /// Apply a Pachner move to a triangulation file and print the result.
    Move {
        /// Triangulation file path.
        file: PathBuf,
        /// Move kind.
        #[arg(long, value_enum)]
        kind: MoveKind,
        /// Target face as vertex labels (3 for 3-3, 4 for 2-4, 2 for 4-2,
        /// 5 for 1-5, 1 for 5-1).
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<String>,
        /// Fresh vertex label (1-5 move only).
        #[arg(long)]
        fresh: Option<String>,
        /// Output path ("-" for stdout).
        #[arg(long, short, default_value = "-")]
        output: String,
    },
    /// Tabulate 10j values over a spin range on one triangle.
    Scan {
        /// File with ten edge lengths (whitespace separated, # comments).
        lengths_file: PathBuf,
        /// Index of the scanned triangle (0..10, lexicographic order).
        #[arg(long, default_value_t = 0)]
        triangle: usize,
        /// First spin value.
        #[arg(long, allow_negative_numbers = true, default_value_t = 0)]
        spin_min: i64,
        /// Last spin value (inclusive; an empty range gives a header-only CSV).
        #[arg(long, allow_negative_numbers = true, default_value_t = 10)]
        spin_max: i64,
        /// Output CSV path ("-" for stdout).
        #[arg(long, short, default_value = "-")]
        output: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lemma,
    Measure,
    Gauge,
    Flatness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MoveKind {
    #[value(name = "3-3")]
    ThreeThree,
    #[value(name = "2-4")]
    TwoFour,
    #[value(name = "4-2")]
    FourTwo,
    #[value(name = "1-5")]
    OneFive,
    #[value(name = "5-1")]
    FiveOne,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<bool, String> {
    match &cli.command {
        Command::Tenj { values, oracle } => {
            let (lengths, spin_values) = values.split_at(10);
            let mut spins = Vec::with_capacity(10);
            for &s in spin_values {
                if s.fract() != 0.0 {
                    // Non-integer spins are a usage error, like a bad count.
                    clap::Command::new("statesum")
                        .error(
                            clap::error::ErrorKind::ValueValidation,
                            format!("spins must be integers, got {s}"),
                        )
                        .exit();
                }
                spins.push(s as i64);
            }
            cmd_tenj(&cli.run, lengths, &spins, *oracle)
        }
        Command::Verify { suite, cases } => cmd_verify(&cli.run, *suite, *cases),
        Command::Weight { file } => cmd_weight(&cli.run, file),
        Command::Move { file, kind, target, fresh, output } => {
            cmd_move(file, *kind, target, fresh.as_deref(), output)
        }
        Command::Scan { lengths_file, triangle, spin_min, spin_max, output } => cmd_scan(
            &cli.run,
            lengths_file,
            *triangle,
            *spin_min,
            *spin_max,
            output,
        ),
    }
}

fn triangle_name(t: [usize; 3]) -> String {
    format!("{}{}{}", t[0], t[1], t[2])
}

fn make_input(lengths: &[f64], spins: &[i64]) -> Result<TenJInput, String> {
    let set = EdgeLengthSet::new(5, lengths.to_vec()).map_err(|e| e.to_string())?;
    let mut s = [0i64; 10];
    s.copy_from_slice(spins);
    TenJInput::new(set, s).map_err(|e| e.to_string())
}

fn cmd_tenj(run: &RunConfig, lengths: &[f64], spins: &[i64], oracle: bool) -> Result<bool, String> {
    let input = make_input(lengths, spins)?;
    let result = match ten_j(&input) {
        Ok(r) => r,
        Err(SymbolError::Geometry(GeomError::DegenerateSimplex(msg))) => {
            println!("weight-zero: {msg}");
            return Ok(true);
        }
        Err(e) => return Err(e.to_string()),
    };
    let oracle_value = if oracle {
        Some(ten_j_from_oracle(&input).map_err(|e| e.to_string())?)
    } else {
        None
    };
    match run.format {
        Format::Table => {
            println!("value      {:.6}", result.value);
            println!("V          {:.6}", result.v);
            println!("sign       {:+}", result.sign);
            println!("sum_s_phi  {:.6}", result.spin_angle);
            for (idx, t) in PENT_TRIANGLES.iter().enumerate() {
                println!("phi_{}    {:.6}", triangle_name(*t), result.dihedrals[idx]);
            }
            if let Some(o) = &oracle_value {
                println!("oracle     {:.6}", o.value);
                println!("deviation  {:.3e}", (result.value - o.value).abs());
            }
        }
        Format::Csv => {
            let mut header = String::from("value,v,sign,sum_s_phi");
            let mut row = format!(
                "{:.17e},{:.17e},{},{:.17e}",
                result.value, result.v, result.sign, result.spin_angle
            );
            for (idx, t) in PENT_TRIANGLES.iter().enumerate() {
                write!(header, ",phi_{}", triangle_name(*t)).unwrap();
                write!(row, ",{:.17e}", result.dihedrals[idx]).unwrap();
            }
            if let Some(o) = &oracle_value {
                header.push_str(",oracle,deviation");
                write!(row, ",{:.17e},{:.17e}", o.value, (result.value - o.value).abs()).unwrap();
            }
            println!("{header}");
            println!("{row}");
        }
    }
    Ok(true)
}

/// Random realizable pentagon lengths near the unit scale.
fn random_realizable(rng: &mut ChaCha8Rng) -> EdgeLengthSet {
    loop {
        let lens: Vec<f64> = (0..10).map(|_| rng.gen_range(0.75..1.25)).collect();
        if let Ok(set) = EdgeLengthSet::new(5, lens) {
            if simplex_v(&set).is_ok() {
                return set;
            }
        }
    }
}

fn summary(suite: &str, cases: u64, pass: u64, max_residual: f64, seed: u64, ok: bool) -> bool {
    println!(
        "VERIFY {suite} cases={cases} pass={pass} max_residual={max_residual:.3e} seed={seed} status={}",
        if ok { "OK" } else { "FAIL" }
    );
    ok
}

fn cmd_verify(run: &RunConfig, suite: Suite, cases: u64) -> Result<bool, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    match suite {
        Suite::Lemma => {
            let mut max_residual: f64 = 0.0;
            let mut pass = 0;
            for case in 0..cases {
                let lengths = random_realizable(&mut rng);
                let input = TenJInput::new(lengths, [0; 10]).map_err(|e| e.to_string())?;
                let mut case_ok = true;
                for orientation in [1i8, -1] {
                    match verify_lemma_oriented(&input, orientation) {
                        Ok(report) => {
                            max_residual = max_residual
                                .max(report.max_residual)
                                .max(report.max_a_plane_residual);
                            if report.max_residual > run.tol
                                || report.triangles.iter().any(|t| t.eps != report.epsilon)
                            {
                                case_ok = false;
                            }
                        }
                        Err(e) => {
                            eprintln!("case {case} orientation {orientation}: {e}");
                            case_ok = false;
                        }
                    }
                }
                if case_ok {
                    pass += 1;
                }
            }
            let ok = pass == cases && max_residual <= run.tol;
            Ok(summary("lemma", cases, pass, max_residual, run.seed, ok))
        }
        Suite::Flatness => {
            let mut max_residual: f64 = 0.0;
            let mut pass = 0;
            let mut done = 0;
            while done < cases {
                let pts: [Vec4; 6] =
                    std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
                let mut case_ok = true;
                let mut degenerate = false;
                for side in [[0usize, 1, 2], [3, 4, 5]] {
                    match flatness_check(&pts, side) {
                        Ok(r) => {
                            max_residual = max_residual.max(r.abs());
                            if r.abs() > 1e-9 {
                                case_ok = false;
                            }
                        }
                        Err(_) => degenerate = true, // unlucky draw; resample
                    }
                }
                if degenerate {
                    continue;
                }
                done += 1;
                if case_ok {
                    pass += 1;
                }
            }
            let ok = pass == cases;
            Ok(summary("flatness", cases, pass, max_residual, run.seed, ok))
        }
        Suite::Gauge => {
            let mut max_residual: f64 = 0.0;
            let mut pass = 0;
            for _ in 0..cases {
                let lengths = random_realizable(&mut rng);
                let spins: [i64; 10] = std::array::from_fn(|_| rng.gen_range(-3..=3));
                let input = TenJInput::new(lengths, spins).map_err(|e| e.to_string())?;
                let base = trace_oracle_with(&input, 1, &GaugeOptions::default())
                    .map_err(|e| e.to_string())?;
                let mut worst: f64 = 0.0;
                // (a) global SO(4) rotation
                let mut opts = GaugeOptions {
                    global_rotation: Some(haar_sample(&mut rng)),
                    ..Default::default()
                };
                worst = worst.max(
                    (trace_oracle_with(&input, 1, &opts).map_err(|e| e.to_string())? - base)
                        .norm(),
                );
                // (b) section chart change
                opts = GaugeOptions { chart: ChartRule::PreferB, ..Default::default() };
                worst = worst.max(
                    (trace_oracle_with(&input, 1, &opts).map_err(|e| e.to_string())? - base)
                        .norm(),
                );
                // (c) SO(3) rotation of one reference tetrahedron
                let twist = rot12(rng.gen_range(-3.0..3.0))
                    * rot23(rng.gen_range(-3.0..3.0))
                    * rot12(rng.gen_range(-3.0..3.0));
                let mut twists: [Option<Rotation>; 5] = Default::default();
                twists[rng.gen_range(0..5)] = Some(twist);
                opts = GaugeOptions { reference_twist: twists, ..Default::default() };
                worst = worst.max(
                    (trace_oracle_with(&input, 1, &opts).map_err(|e| e.to_string())? - base)
                        .norm(),
                );
                max_residual = max_residual.max(worst);
                if worst <= 1e-10 {
                    pass += 1;
                }
            }
            let ok = pass == cases;
            Ok(summary("gauge", cases, pass, max_residual, run.seed, ok))
        }
        Suite::Measure => {
            let lengths = EdgeLengthSet::regular(5, 1.0).map_err(|e| e.to_string())?;
            let report = measure_constant_check(&lengths, run.samples, 0.05, &mut rng)
                .map_err(|e| e.to_string())?;
            let sphere_rel = (report.sphere_volume.value - report.sphere_volume_formula).abs()
                / report.sphere_volume_formula;
            let tri_rel = (report.triangle_measure.value - report.triangle_measure_expected).abs()
                / report.triangle_measure_expected;
            let kappa_rel =
                (report.kappa.value - report.kappa_derived).abs() / report.kappa_derived;
            let kappa_err_rel = report.kappa.std_err / report.kappa_derived;
            println!(
                "sphere   l={} estimate={:.6} +- {:.1e} formula(pi*l^2)={:.6} quoted(pi*l^3)={:.6} rel={:.3e}",
                report.sphere_radius,
                report.sphere_volume.value,
                report.sphere_volume.std_err,
                report.sphere_volume_formula,
                report.sphere_volume_quoted,
                sphere_rel
            );
            println!(
                "triangle ({},{},{}) estimate={:.6} +- {:.1e} expected(2A)={:.6} rel={:.3e}",
                report.triangle_sides[0],
                report.triangle_sides[1],
                report.triangle_sides[2],
                report.triangle_measure.value,
                report.triangle_measure.std_err,
                report.triangle_measure_expected,
                tri_rel
            );
            println!(
                "kappa    measured={:.8} +- {:.2e} derived(1/(64*pi))={:.8} quoted={:.6}/{:.6} rel={:.3e}",
                report.kappa.value,
                report.kappa.std_err,
                report.kappa_derived,
                report.kappa_quoted[0],
                report.kappa_quoted[1],
                kappa_rel
            );
            let ok =
                sphere_rel < 0.01 && tri_rel < 0.02 && kappa_rel < 0.05 && kappa_err_rel < 0.05;
            let pass = u64::from(ok);
            Ok(summary(
                "measure",
                1,
                pass,
                sphere_rel.max(tri_rel).max(kappa_rel),
                run.seed,
                ok,
            ))
        }
    }
}

fn cmd_weight(run: &RunConfig, file: &PathBuf) -> Result<bool, String> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let parsed = parse_triangulation(&text).map_err(|e| e.to_string())?;
    let tri = &parsed.triangulation;
    let report = weight_report(tri, &parsed.labeling).map_err(|e| e.to_string())?;
    let face_name = |verts: &[usize]| -> String {
        verts
            .iter()
            .map(|&v| tri.label_of(v).to_string())
            .collect::<Vec<_>>()
            .join("-")
    };
    match run.format {
        Format::Table => {
            println!(
                "triangulation: {} vertices, {} edges, {} triangles, {} tets, {} pents ({})",
                tri.n_vertices(),
                tri.edges().len(),
                tri.triangles().len(),
                tri.tets().len(),
                tri.pents().len(),
                if tri.is_closed() { "closed" } else { "with boundary" }
            );
            for (ti, factor) in &report.area_factors {
                println!(
                    "area     {:<12} 2A = {:.6}",
                    face_name(&tri.triangles()[*ti]),
                    factor
                );
            }
            for (ti, sign) in &report.tet_sign_factors {
                println!("tet-sign {:<12} {:+}", face_name(&tri.tets()[*ti]), sign);
            }
            for (pi, r) in &report.pent_factors {
                println!(
                    "tenj     {:<12} value = {:.6}  V = {:.6}",
                    face_name(&tri.sorted_pent(*pi)),
                    r.value,
                    r.v
                );
            }
            if let Some(reason) = &report.zero_reason {
                println!("weight-zero: {reason}");
            }
            println!("unsigned     {:.6}", report.unsigned_total);
            println!("weight       {:.6}", report.total);
        }
        Format::Csv => {
            println!("factor,face,value");
            for (ti, factor) in &report.area_factors {
                println!("area,{},{:.17e}", face_name(&tri.triangles()[*ti]), factor);
            }
            for (ti, sign) in &report.tet_sign_factors {
                println!("tet-sign,{},{}", face_name(&tri.tets()[*ti]), sign);
            }
            for (pi, r) in &report.pent_factors {
                println!("tenj,{},{:.17e}", face_name(&tri.sorted_pent(*pi)), r.value);
            }
            println!("unsigned,,{:.17e}", report.unsigned_total);
            println!("weight,,{:.17e}", report.total);
        }
    }
    Ok(true)
}

fn cmd_move(
    file: &PathBuf,
    kind: MoveKind,
    target: &[String],
    fresh: Option<&str>,
    output: &str,
) -> Result<bool, String> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let parsed = parse_triangulation(&text).map_err(|e| e.to_string())?;
    let arity = |want: usize| -> Result<(), String> {
        if target.len() == want {
            Ok(())
        } else {
            Err(format!("this move targets {want} vertices, got {}", target.len()))
        }
    };
    let spec = match kind {
        MoveKind::ThreeThree => {
            arity(3)?;
            MoveSpec::ThreeThree {
                triangle: [target[0].clone(), target[1].clone(), target[2].clone()],
            }
        }
        MoveKind::TwoFour => {
            arity(4)?;
            MoveSpec::TwoFour {
                tet: [
                    target[0].clone(),
                    target[1].clone(),
                    target[2].clone(),
                    target[3].clone(),
                ],
            }
        }
        MoveKind::FourTwo => {
            arity(2)?;
            MoveSpec::FourTwo { edge: [target[0].clone(), target[1].clone()] }
        }
        MoveKind::OneFive => {
            arity(5)?;
            MoveSpec::OneFive {
                pent: [
                    target[0].clone(),
                    target[1].clone(),
                    target[2].clone(),
                    target[3].clone(),
                    target[4].clone(),
                ],
                fresh: fresh.ok_or("the 1-5 move needs --fresh <label>")?.to_string(),
            }
        }
        MoveKind::FiveOne => {
            arity(1)?;
            MoveSpec::FiveOne { vertex: target[0].clone() }
        }
    };
    let moved = apply_move(&parsed.triangulation, &spec).map_err(|e| e.to_string())?;
    let out = format_triangulation(&moved, &parsed.labeling);
    if output == "-" {
        print!("{out}");
    } else {
        std::fs::write(output, out).map_err(|e| format!("cannot write {output}: {e}"))?;
    }
    Ok(true)
}

fn cmd_scan(
    _run: &RunConfig,
    lengths_file: &PathBuf,
    triangle: usize,
    spin_min: i64,
    spin_max: i64,
    output: &str,
) -> Result<bool, String> {
    if triangle >= 10 {
        return Err(format!("triangle index {triangle} out of range 0..10"));
    }
    let text = std::fs::read_to_string(lengths_file)
        .map_err(|e| format!("cannot read {}: {e}", lengths_file.display()))?;
    let mut lens: Vec<f64> = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            lens.push(tok.parse().map_err(|_| {
                format!("bad length token `{tok}` in {}", lengths_file.display())
            })?);
        }
    }
    if lens.len() != 10 {
        return Err(format!(
            "expected 10 lengths in {}, found {} (edge order: {})",
            lengths_file.display(),
            lens.len(),
            PENT_EDGES
                .iter()
                .map(|e| format!("{}{}", e[0], e[1]))
                .collect::<Vec<_>>()
                .join(" ")
        ));
    }
    let mut csv = String::new();
    let mut header: Vec<String> = (0..10)
        .map(|i| format!("s_{}", triangle_name(PENT_TRIANGLES[i])))
        .collect();
    header.extend(["value".into(), "v".into(), "sum_s_phi".into()]);
    csv.push_str(&header.join(","));
    csv.push('\n');
    for s in spin_min..=spin_max {
        let mut spins = [0i64; 10];
        spins[triangle] = s;
        let input = make_input(&lens, &spins)?;
        let r = ten_j(&input).map_err(|e| e.to_string())?;
        let mut row: Vec<String> = spins.iter().map(|x| x.to_string()).collect();
        row.push(format!("{:.17e}", r.value));
        row.push(format!("{:.17e}", r.v));
        row.push(format!("{:.17e}", r.spin_angle));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    if output == "-" {
        print!("{csv}");
    } else {
        std::fs::write(output, csv).map_err(|e| format!("cannot write {output}: {e}"))?;
    }
    Ok(true)
}
