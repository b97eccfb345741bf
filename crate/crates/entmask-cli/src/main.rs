//! `entmask` — the witness pipeline on the command line.
//!
//! Subcommands: `bound` (separability bound for one period pair),
//! `matrix` (joint outcome probabilities by quadrature), `witness`
//! (full evaluation at one setting), `scan` (period grids), `simulate`
//! (coincidence counts), `rebin` (fine histogram → outcome matrix), and
//! `table1` (the eleven pinned reference settings).
//!
//! Exit codes: 0 on success, 2 on parameter or file errors, 3 when a
//! series bracket or quadrature cannot reach its accuracy target.
//! Every output file carries enough metadata to re-run the command
//! bit-identically. `NO_COLOR` disables help/error styling.

use clap::{ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand};
use entmask::{
    bound_bracket, build_detection_model, configure_threads, evaluate_witness, mask_joint_matrix,
    read_config, read_fine_histogram, rebin_histogram, render_joint_matrix, render_scan_table,
    scan_equal_periods, scan_grid, simulate_counts, write_count_matrix, write_joint_matrix,
    write_scan_table, DetectionModel, Domain, Error, MaskSpec, OpticalSetup, Result, ScanRow,
    ScanTable, SimConfig, SincTreatment, SourceParams, DEFAULT_N_MAX, DEFAULT_SUPPORT_SIGMAS,
    DEFAULT_TARGET_WIDTH, GENERATOR_ID, REFERENCE_ROWS,
};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Print to stdout, exiting quietly if the reader closed the pipe
/// early (e.g. `entmask table1 | head -3`) instead of panicking.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: failed writing to stdout: {e}");
        std::process::exit(2);
    }
}

macro_rules! outln {
    ($($arg:tt)*) => { emit(&format!("{}\n", format_args!($($arg)*))) };
}

#[derive(Parser)]
#[command(
    name = "entmask",
    version,
    about = "Entanglement certification for photon pairs behind periodic slit masks"
)]
struct Cli {
    /// Cap the worker thread pool (0 = one thread per logical CPU).
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the separability bound Q_d for one period pair.
    Bound(BoundArgs),
    /// Compute the d x d joint outcome matrix by quadrature.
    Matrix(MatrixArgs),
    /// Evaluate the witness I_d against the bound at one setting.
    Witness(WitnessArgs),
    /// Scan the witness over a period grid.
    Scan(ScanArgs),
    /// Simulate coincidence counts for every mask setting.
    Simulate(SimulateArgs),
    /// Rebin a fine joint histogram into mask outcomes.
    Rebin(RebinArgs),
    /// Reproduce the bounds of the eleven pinned reference settings.
    Table1(Table1Args),
}

/// Model selection shared by the physics subcommands.
#[derive(clap::Args)]
struct ModelArgs {
    /// JSON config with source and optics parameters; omitted means the
    /// reference setup.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

impl ModelArgs {
    fn params(&self) -> Result<(SourceParams, OpticalSetup)> {
        match &self.config {
            Some(path) => read_config(path),
            None => Ok((SourceParams::reference(), OpticalSetup::reference())),
        }
    }

    fn model(&self) -> Result<DetectionModel> {
        let (source, optics) = self.params()?;
        build_detection_model(&source, &optics, SincTreatment::GaussianVarianceMatch)
    }
}

#[derive(clap::Args)]
struct BoundArgs {
    /// Outcomes per arm.
    #[arg(long)]
    d: usize,
    /// Image-plane mask period in mm.
    #[arg(long)]
    tx: f64,
    /// Far-field mask period in mm.
    #[arg(long)]
    tp: f64,
    /// Commutator scale c = M * alpha in mm²; overrides the model.
    #[arg(long, conflicts_with = "config")]
    c: Option<f64>,
    /// Target bracket width.
    #[arg(long, default_value_t = DEFAULT_TARGET_WIDTH)]
    tol: f64,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(clap::Args)]
struct MatrixArgs {
    /// Detection plane: IP or FF.
    #[arg(long)]
    domain: String,
    /// Outcomes per arm.
    #[arg(long)]
    d: usize,
    /// Mask period in mm.
    #[arg(long)]
    t: f64,
    /// Arm-A mask offset in mm.
    #[arg(long, default_value_t = 0.0)]
    offset_a: f64,
    /// Arm-B mask offset in mm.
    #[arg(long, default_value_t = 0.0)]
    offset_b: f64,
    /// Per-entry quadrature tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Integration support half-width, in marginal widths.
    #[arg(long, default_value_t = DEFAULT_SUPPORT_SIGMAS)]
    support: f64,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(clap::Args)]
struct WitnessArgs {
    /// Outcomes per arm.
    #[arg(long)]
    d: usize,
    /// Image-plane mask period in mm.
    #[arg(long)]
    tx: f64,
    /// Far-field mask period in mm.
    #[arg(long)]
    tp: f64,
    /// Per-entry quadrature tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Also write the result as a one-row scan CSV.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(clap::Args)]
struct ScanArgs {
    /// Outcome counts, comma separated (e.g. 2,3,4).
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<usize>,
    /// Period range LO:HI:STEP in mm, used for both planes.
    #[arg(long, value_name = "LO:HI:STEP")]
    t_range: Option<String>,
    /// Image-plane period range (overrides --t-range for Tx).
    #[arg(long, value_name = "LO:HI:STEP")]
    tx_range: Option<String>,
    /// Far-field period range (overrides --t-range for Tp).
    #[arg(long, value_name = "LO:HI:STEP")]
    tp_range: Option<String>,
    /// Constrain Tx = Tp = T instead of scanning the full cross product.
    #[arg(long)]
    equal_periods: bool,
    /// Per-entry quadrature tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Outcomes per arm.
    #[arg(long)]
    d: usize,
    /// Image-plane mask period in mm.
    #[arg(long)]
    tx: f64,
    /// Far-field mask period in mm.
    #[arg(long)]
    tp: f64,
    /// Photon pairs generated per mask setting.
    #[arg(long)]
    pairs: u64,
    /// Base seed; together with the recorded generator it fixes every
    /// count.
    #[arg(long)]
    seed: u64,
    /// Detection efficiency applied to both arms, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    efficiency: f64,
    /// Arm-A efficiency override.
    #[arg(long)]
    efficiency_a: Option<f64>,
    /// Arm-B efficiency override.
    #[arg(long)]
    efficiency_b: Option<f64>,
    /// Output CSV for the image-plane counts.
    #[arg(long, value_name = "FILE")]
    out_ip: PathBuf,
    /// Output CSV for the far-field counts.
    #[arg(long, value_name = "FILE")]
    out_ff: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(clap::Args)]
struct RebinArgs {
    /// Input fine-histogram CSV.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Outcomes per arm.
    #[arg(long)]
    d: usize,
    /// Mask period in mm.
    #[arg(long)]
    t: f64,
    /// Mask offset in mm, applied to both arms.
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    /// Domain label for the output matrix: IP or FF.
    #[arg(long)]
    domain: String,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct Table1Args {
    /// Target bracket width per bound.
    #[arg(long, default_value_t = DEFAULT_TARGET_WIDTH)]
    tol: f64,
    /// Also write the table as CSV.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

fn main() -> ExitCode {
    // Clap prints its own diagnostics and exits with code 2 on usage
    // errors, matching the parameter-error convention.
    let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
    let color = if no_color {
        ColorChoice::Never
    } else {
        ColorChoice::Auto
    };
    let matches = Cli::command().color(color).get_matches();
    let cli = Cli::from_arg_matches(&matches).expect("argument model matches parser");
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Bound(args) => cmd_bound(args),
        Command::Matrix(args) => cmd_matrix(args),
        Command::Witness(args) => cmd_witness(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Rebin(args) => cmd_rebin(args),
        Command::Table1(args) => cmd_table1(args),
    }
}

/// The exact invocation, recorded in output metadata.
fn invocation() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn format_value(x: f64) -> String {
    format!("{x:.12e}")
}

/// Metadata lines that pin the model parameters a file was produced
/// with, so results are reproducible without the config file.
fn model_metadata(source: &SourceParams, optics: &OpticalSetup) -> Vec<(String, String)> {
    vec![
        ("command".into(), invocation()),
        (
            "pump_wavelength_nm".into(),
            format_value(source.pump_wavelength_nm),
        ),
        (
            "photon_wavelength_nm".into(),
            format_value(source.photon_wavelength_nm),
        ),
        (
            "crystal_length_mm".into(),
            format_value(source.crystal_length_mm),
        ),
        ("pump_waist_mm".into(), format_value(source.pump_waist_mm)),
        ("magnification".into(), format_value(optics.magnification)),
        (
            "effective_focal_length_mm".into(),
            format_value(optics.effective_focal_length_mm),
        ),
    ]
}

fn as_refs(meta: &[(String, String)]) -> Vec<(&str, &str)> {
    meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect()
}

/// Parse a LO:HI:STEP period range into the grid values LO, LO+STEP, …
/// up to and including HI (within half a step of float slack).
fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = |msg: &str| Error::Parameter(format!("range {text:?}: {msg}"));
    if parts.len() != 3 {
        return Err(bad("expected LO:HI:STEP"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("values must be numbers"))?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo > 0.0 && lo.is_finite() && hi >= lo && hi.is_finite()) {
        return Err(bad("need 0 < LO <= HI"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(bad("need STEP > 0"));
    }
    let count = ((hi - lo) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

fn cmd_bound(args: BoundArgs) -> Result<()> {
    let c = match args.c {
        Some(c) => c,
        None => args.model.model()?.c,
    };
    let b = bound_bracket(args.d, args.tx, args.tp, c, args.tol, DEFAULT_N_MAX)?;
    outln!("gamma = {:.9}", b.gamma);
    outln!("Q_{}({}, {}) = {:.3}", args.d, args.tx, args.tp, b.value);
    outln!(
        "bracket [{:.9}, {:.9}], width {:.3e}, {} terms",
        b.lower,
        b.upper,
        b.upper - b.lower,
        b.n_terms
    );
    Ok(())
}

fn cmd_matrix(args: MatrixArgs) -> Result<()> {
    let domain = Domain::parse(&args.domain)?;
    let (source, optics) = args.model.params()?;
    let model = build_detection_model(&source, &optics, SincTreatment::GaussianVarianceMatch)?;
    let spec_a = MaskSpec::with_offset(args.d, args.t, args.offset_a)?;
    let spec_b = MaskSpec::with_offset(args.d, args.t, args.offset_b)?;
    let matrix = mask_joint_matrix(&model, domain, &spec_a, &spec_b, args.tol, args.support)?;
    let mut meta = model_metadata(&source, &optics);
    meta.push(("T_mm".into(), format_value(args.t)));
    meta.push(("offset_a_mm".into(), format_value(args.offset_a)));
    meta.push(("offset_b_mm".into(), format_value(args.offset_b)));
    meta.push(("support_sigmas".into(), format_value(args.support)));
    let refs = as_refs(&meta);
    match &args.out {
        Some(path) => {
            write_joint_matrix(path, &matrix, &refs)?;
            eprintln!("wrote {}", path.display());
        }
        None => emit(&render_joint_matrix(&matrix, &refs)),
    }
    Ok(())
}

fn cmd_witness(args: WitnessArgs) -> Result<()> {
    let (source, optics) = args.model.params()?;
    let model = build_detection_model(&source, &optics, SincTreatment::GaussianVarianceMatch)?;
    let w = evaluate_witness(&model, args.d, args.tx, args.tp, args.tol)?;
    outln!("C_xx = {:.6}", w.stats.c_xx);
    outln!("C_pp = {:.6}", w.stats.c_pp);
    outln!("I_{} = {:.6}", args.d, w.stats.i_d);
    outln!(
        "Q_{} = {:.3} (bracket [{:.9}, {:.9}])",
        args.d, w.bound.value, w.bound.lower, w.bound.upper
    );
    outln!("margin = {:+.6}", w.margin);
    outln!("entangled: {}", if w.detected { "yes" } else { "no" });
    if let Some(path) = &args.out {
        let table = ScanTable {
            rows: vec![ScanRow {
                d: args.d,
                tx_mm: args.tx,
                tp_mm: args.tp,
                c_xx: w.stats.c_xx,
                c_pp: w.stats.c_pp,
                i_d: w.stats.i_d,
                q_d: w.bound.value,
                margin: w.margin,
                detected: w.detected,
            }],
        };
        let mut meta = model_metadata(&source, &optics);
        meta.push(("tol".into(), format_value(args.tol)));
        write_scan_table(path, &table, &as_refs(&meta))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<()> {
    let (source, optics) = args.model.params()?;
    let model = build_detection_model(&source, &optics, SincTreatment::GaussianVarianceMatch)?;
    let table = if args.equal_periods {
        let range = args.t_range.as_deref().ok_or_else(|| {
            Error::Parameter("--equal-periods needs --t-range".into())
        })?;
        if args.tx_range.is_some() || args.tp_range.is_some() {
            return Err(Error::Parameter(
                "--equal-periods uses --t-range alone; drop --tx-range/--tp-range".into(),
            ));
        }
        scan_equal_periods(&model, &args.d, &parse_range(range)?, args.tol)?
    } else {
        let tx_text = args.tx_range.as_deref().or(args.t_range.as_deref());
        let tp_text = args.tp_range.as_deref().or(args.t_range.as_deref());
        let (tx_text, tp_text) = match (tx_text, tp_text) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Parameter(
                    "scan needs --t-range, or --tx-range and --tp-range".into(),
                ))
            }
        };
        scan_grid(
            &model,
            &args.d,
            &parse_range(tx_text)?,
            &parse_range(tp_text)?,
            args.tol,
        )?
    };
    let mut meta = model_metadata(&source, &optics);
    meta.push(("tol".into(), format_value(args.tol)));
    let refs = as_refs(&meta);
    match &args.out {
        Some(path) => {
            write_scan_table(path, &table, &refs)?;
            eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
        }
        None => emit(&render_scan_table(&table, &refs)),
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let (source, optics) = args.model.params()?;
    let model = build_detection_model(&source, &optics, SincTreatment::GaussianVarianceMatch)?;
    let sim = SimConfig {
        pairs_per_setting: args.pairs,
        seed: args.seed,
        efficiency_a: args.efficiency_a.unwrap_or(args.efficiency),
        efficiency_b: args.efficiency_b.unwrap_or(args.efficiency),
    };
    let (ip, ff) = simulate_counts(&model, args.d, args.tx, args.tp, &sim)?;
    let mut meta = model_metadata(&source, &optics);
    meta.push(("pairs_per_setting".into(), args.pairs.to_string()));
    meta.push(("seed".into(), args.seed.to_string()));
    meta.push(("efficiency_a".into(), format_value(sim.efficiency_a)));
    meta.push(("efficiency_b".into(), format_value(sim.efficiency_b)));
    meta.push(("generator".into(), GENERATOR_ID.into()));
    let refs = as_refs(&meta);
    write_count_matrix(&args.out_ip, &ip, &refs)?;
    write_count_matrix(&args.out_ff, &ff, &refs)?;
    outln!(
        "image plane: {} coincidences over {} settings -> {}",
        ip.total(),
        args.d * args.d,
        args.out_ip.display()
    );
    outln!(
        "far field:   {} coincidences over {} settings -> {}",
        ff.total(),
        args.d * args.d,
        args.out_ff.display()
    );
    Ok(())
}

fn cmd_rebin(args: RebinArgs) -> Result<()> {
    let domain = Domain::parse(&args.domain)?;
    let hist = read_fine_histogram(&args.input)?;
    let spec = MaskSpec::with_offset(args.d, args.t, args.offset)?;
    let matrix = rebin_histogram(&hist, &spec, domain)?;
    let meta = vec![
        ("command".to_string(), invocation()),
        ("input".to_string(), args.input.display().to_string()),
        ("T_mm".to_string(), format_value(args.t)),
        ("offset_mm".to_string(), format_value(args.offset)),
    ];
    let refs = as_refs(&meta);
    match &args.out {
        Some(path) => {
            write_joint_matrix(path, &matrix, &refs)?;
            eprintln!("wrote {}", path.display());
        }
        None => emit(&render_joint_matrix(&matrix, &refs)),
    }
    Ok(())
}

fn cmd_table1(args: Table1Args) -> Result<()> {
    let (source, optics) = args.model.params()?;
    let model = build_detection_model(&source, &optics, SincTreatment::GaussianVarianceMatch)?;
    outln!(" d   Tx/mm  Tp/mm    Q_d   bracket width  terms");
    let mut csv = String::new();
    csv.push_str(&format!("# command,{}\n", invocation()));
    csv.push_str("d,Tx_mm,Tp_mm,Q_d,lower,upper,n_terms\n");
    for row in &REFERENCE_ROWS {
        let b = bound_bracket(row.d, row.tx_mm, row.tp_mm, model.c, args.tol, DEFAULT_N_MAX)?;
        outln!(
            "{:2}   {:5.2}  {:5.2}  {:.3}   {:12.3e}  {:6}",
            row.d,
            row.tx_mm,
            row.tp_mm,
            b.value,
            b.upper - b.lower,
            b.n_terms
        );
        csv.push_str(&format!(
            "{},{},{},{:.3},{},{},{}\n",
            row.d,
            format_value(row.tx_mm),
            format_value(row.tp_mm),
            b.value,
            format_value(b.lower),
            format_value(b.upper),
            b.n_terms
        ));
    }
    if let Some(path) = &args.out {
        std::fs::write(path, csv).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
