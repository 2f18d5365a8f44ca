use std::fmt::Write as _;
use std::path::Path;

use tefree::disk::{dtn_compare, exact_dtn, Correction, DiskConfig};
use tefree::parametrix::{
    phase_lower_bound_check, residual_ratios, solve_eikonal, solve_transport, DiskNormalForm, NormalForm, TransportForm,
};
use tefree::psido::composition_defect;
use tefree::regions::{exponent_fit, in_region, weyl_compare, Branch, ExponentFit, RegionSpec};
use tefree::rootscan::{default_k_max, spectrum, EigRecord, RootOptions, ScanRegion, Spectrum};
use tefree::symbol::{default_delta0_single, inversion_symbol, BoundaryFunction, GridSpec};
use tefree::Complex64;

use crate::config::{ModeCutoff, RunConfig};
use crate::svg::{Curve, Scatter};
use crate::table::{fmt_num, loglog_slope, Cell, Table};
use crate::{Context, Failure};

/// Envelope exponents are accepted up to this margin above the region exponent.
const EXPONENT_MARGIN: f64 = 0.05;

fn k_max_for(cfg: &RunConfig, disk: &DiskConfig, region: &ScanRegion) -> u32 {
    match cfg.scan.as_ref().map(|s| s.k_max) {
        Some(ModeCutoff::Fixed(k)) => k,
        _ => default_k_max(disk, region),
    }
}

fn options(cfg: &RunConfig) -> RootOptions {
    RootOptions { tol: cfg.scan.as_ref().map_or(1e-8, |s| s.tol), ..Default::default() }
}

fn eig_table(records: &[EigRecord]) -> Table {
    let mut t = Table::new(&["re_lambda", "im_lambda", "mode", "multiplicity", "residual", "newton_iters"]);
    for r in records {
        t.push(vec![
            r.lambda.re.into(),
            r.lambda.im.into(),
            r.mode.into(),
            r.multiplicity.into(),
            r.residual.into(),
            r.newton_iters.into(),
        ]);
    }
    t
}

fn write_svg(ctx: &Context, stem: &str, plot: &Scatter) -> Result<(), Failure> {
    if ctx.svg {
        std::fs::write(ctx.out.join(format!("{stem}.svg")), plot.render()).map_err(Failure::io)?;
    }
    Ok(())
}

pub fn solve(cfg: &RunConfig, ctx: &Context) -> Result<(), Failure> {
    let scan = cfg.scan.as_ref().ok_or_else(|| Failure::invalid("solve needs a `scan` section".into()))?;
    let disk = cfg.disk()?;
    let region = cfg.region_of(scan)?;
    let s = spectrum(&disk, &region, k_max_for(cfg, &disk, &region), &options(cfg))?;
    eig_table(&s.records).write(&ctx.out, "eigenvalues", ctx.json)?;
    let plot = Scatter {
        title: format!("transmission eigenvalues, media {:?}", cfg.disk.media),
        x_label: "Re lambda".into(),
        y_label: "Im lambda".into(),
        points: s.records.iter().map(|r| (r.lambda.re, r.lambda.im)).collect(),
        curves: Vec::new(),
    };
    write_svg(ctx, "eigenvalues", &plot)?;
    let total: u64 = s.records.iter().map(|r| r.multiplicity as u64).sum();
    println!(
        "{} eigenvalues ({} with multiplicity) over modes 0..={}",
        s.records.len(),
        total,
        s.k_max
    );
    Ok(())
}

fn read_eigs(path: &Path) -> Result<Vec<EigRecord>, Failure> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let header = rd.headers().map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (re, im) = match (col("re_lambda"), col("im_lambda")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Failure::invalid(format!("{}: needs re_lambda and im_lambda columns", path.display()))),
    };
    let (mode, mult) = (col("mode"), col("multiplicity"));
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|_| Failure::invalid(format!("{}: row {}: bad number {:?}", path.display(), line + 1, field(i))))
        };
        let int = |c: Option<usize>, dflt: u32| -> Result<u32, Failure> {
            match c {
                None => Ok(dflt),
                Some(i) => field(i).parse::<u32>().map_err(|_| {
                    Failure::invalid(format!("{}: row {}: bad integer {:?}", path.display(), line + 1, field(i)))
                }),
            }
        };
        out.push(EigRecord {
            lambda: Complex64::new(num(re)?, num(im)?),
            mode: int(mode, 0)?,
            multiplicity: int(mult, 1)?,
            residual: 0.0,
            log_abs: 0.0,
            newton_iters: 0,
        });
    }
    Ok(out)
}

fn region_name(r: &RegionSpec) -> String {
    match *r {
        RegionSpec::LambdaPlus { c, eps } => format!("lambda_plus(c={c},eps={eps})"),
        RegionSpec::LambdaMinus { c, c_tilde } => format!("lambda_minus(c={c},c_tilde={c_tilde})"),
        RegionSpec::FrontFourFifths { c } => format!("front_4_5(c={c})"),
        RegionSpec::NegativeAxis { c, n } => format!("negative_axis(c={c},n={n})"),
        RegionSpec::Strip { c, kappa } => format!("strip(c={c},kappa={kappa})"),
    }
}

fn region_curve(r: &RegionSpec, re_lo: f64, re_hi: f64) -> Vec<Curve> {
    let sample = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64| -> Vec<(f64, f64)> {
        (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).map(|x| (x, f(x))).collect()
    };
    let (c, p) = match (*r, r.exponent()) {
        (RegionSpec::LambdaPlus { c, .. }, Some(p))
        | (RegionSpec::FrontFourFifths { c }, Some(p))
        | (RegionSpec::NegativeAxis { c, .. }, Some(p))
        | (RegionSpec::Strip { c, .. }, Some(p)) => (c, p),
        (RegionSpec::LambdaMinus { c, c_tilde }, _) => {
            let lo = (-c_tilde).max(re_lo.min(0.0));
            let upper = sample(lo, 0.0, &|_| c);
            let lower = upper.iter().map(|&(x, y)| (x, -y)).collect();
            return vec![
                Curve { label: region_name(r), points: upper },
                Curve { label: String::new(), points: lower },
            ];
        }
        _ => return Vec::new(),
    };
    let (lo, hi) = match r {
        RegionSpec::LambdaPlus { .. } | RegionSpec::FrontFourFifths { .. } => (0f64.max(re_lo), re_hi.max(0.0)),
        RegionSpec::NegativeAxis { .. } => (re_lo.min(0.0), 0f64.min(re_hi)),
        _ => (re_lo, re_hi),
    };
    if hi <= lo {
        return Vec::new();
    }
    let upper = sample(lo, hi, &|x| c * (x.abs() + 1.0).powf(p));
    let lower = upper.iter().map(|&(x, y)| (x, -y)).collect();
    vec![Curve { label: format!("{} |Im| = {c}(|Re|+1)^{p}", region_name(r)), points: upper }, Curve {
        label: String::new(),
        points: lower,
    }]
}

fn fit_line(report: &mut String, name: &str, fit: &Result<ExponentFit, tefree::Error>) {
    match fit {
        Ok(f) => {
            let _ = writeln!(report, "{name}: beta = {}, C = {}, envelope points {}", fmt_num(f.beta), fmt_num(f.c), f.envelope.len());
        }
        Err(e) => {
            let _ = writeln!(report, "{name}: {e}");
        }
    }
}

pub fn regions(eigs_path: &Path, cfg: Option<&RunConfig>, ctx: &Context) -> Result<(), Failure> {
    let eigs = read_eigs(eigs_path)?;
    let specs: Vec<RegionSpec> = match cfg {
        Some(c) if !c.regions.is_empty() => c.regions.clone(),
        _ => vec![RegionSpec::FrontFourFifths { c: 1.0 }],
    };
    let mut header = vec!["re_lambda".to_string(), "im_lambda".to_string()];
    header.extend(specs.iter().map(region_name));
    let mut table = Table { header, rows: Vec::new() };
    for e in &eigs {
        let mut row: Vec<Cell> = vec![e.lambda.re.into(), e.lambda.im.into()];
        row.extend(specs.iter().map(|s| Cell::from(in_region(e.lambda, s))));
        table.push(row);
    }
    table.write(&ctx.out, "regions", ctx.json)?;

    let mut report = String::new();
    if eigs.is_empty() {
        report.push_str("no eigenvalues\n");
    } else {
        let _ = writeln!(report, "{} eigenvalues", eigs.len());
        for s in &specs {
            let inside = eigs.iter().filter(|e| in_region(e.lambda, s)).count();
            let _ = writeln!(report, "{}: {inside} eigenvalues inside", region_name(s));
        }
        let right = exponent_fit(&eigs, Branch::Right);
        let left = exponent_fit(&eigs, Branch::Left);
        fit_line(&mut report, "exponent_fit Re >= 0", &right);
        fit_line(&mut report, "exponent_fit Re <= 0", &left);
        for s in &specs {
            let Some(p) = s.exponent() else { continue };
            let fit = if p >= 0.0 { &right } else { &left };
            let verdict = match fit {
                Ok(f) if f.beta <= p + EXPONENT_MARGIN => "PASS".to_string(),
                Ok(_) => "FAIL".to_string(),
                Err(e) => format!("SKIP ({e})"),
            };
            let _ = writeln!(report, "exponent_fit <= {p}+{EXPONENT_MARGIN}: {verdict} [{}]", region_name(s));
        }
    }
    print!("{report}");
    std::fs::write(ctx.out.join("regions_report.txt"), &report).map_err(Failure::io)?;

    let (re_lo, re_hi) = eigs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e.lambda.re), b.max(e.lambda.re)));
    let (re_lo, re_hi) = if eigs.is_empty() { (0.0, 1.0) } else { (re_lo, re_hi) };
    let mut curves: Vec<Curve> = specs.iter().flat_map(|s| region_curve(s, re_lo, re_hi)).collect();
    if let Ok(f) = exponent_fit(&eigs, Branch::Right) {
        if f.beta.is_finite() && re_hi > 0.0 {
            let lo = re_lo.max(0.0);
            let pts = (0..=200)
                .map(|i| lo + (re_hi - lo) * i as f64 / 200.0)
                .map(|x| (x, f.c * (x + 1.0).powf(f.beta)))
                .collect();
            curves.push(Curve { label: format!("fitted envelope, beta = {:.3}", f.beta), points: pts });
        }
    }
    let plot = Scatter {
        title: "eigenvalues and region boundaries".into(),
        x_label: "Re lambda".into(),
        y_label: "Im lambda".into(),
        points: eigs.iter().map(|e| (e.lambda.re, e.lambda.im)).collect(),
        curves,
    };
    write_svg(ctx, "regions", &plot)
}

fn semiclassical(cfg: &RunConfig) -> Result<&crate::config::SemiclassicalSection, Failure> {
    cfg.semiclassical.as_ref().ok_or_else(|| Failure::invalid("this command needs a `semiclassical` section".into()))
}

pub fn dtn_check(cfg: &RunConfig, ctx: &Context) -> Result<(), Failure> {
    let sc = semiclassical(cfg)?;
    let (c, n) = cfg.single_medium();
    let radius = cfg.disk.radius;
    let delta0 = default_delta0_single(n / c);
    let mut t = Table::new(&[
        "z_re",
        "z_im",
        "zone",
        "h",
        "m_max",
        "error_rho",
        "error_rho_hb",
        "error_rho_cutoff_b",
        "zero_mode_exact_im",
    ]);
    for zp in &sc.z {
        let (mut e0, mut e1, mut e2) = (Vec::new(), Vec::new(), Vec::new());
        for &h in &sc.h {
            let sp = zp.point(h)?;
            let m = ((sc.modes_per_h / h) as usize).clamp(1, 2000);
            let a = dtn_compare(&sp, c, n, radius, m, Correction::None, delta0)?;
            let b = dtn_compare(&sp, c, n, radius, m, Correction::FirstTransport, delta0)?;
            let p = dtn_compare(&sp, c, n, radius, m, Correction::CutoffSymbol, delta0)?;
            let zero = exact_dtn(0, &sp, radius, c, n)?;
            t.push(vec![
                zp.re.into(),
                zp.im.into(),
                format!("{:?}", zp.zone()?).as_str().into(),
                h.into(),
                m.into(),
                a.weighted_error.into(),
                b.weighted_error.into(),
                p.weighted_error.into(),
                zero.im.into(),
            ]);
            e0.push(a.weighted_error);
            e1.push(b.weighted_error);
            e2.push(p.weighted_error);
        }
        let sl = |v: &[f64]| Cell::Num(loglog_slope(&sc.h, v).unwrap_or(f64::NAN));
        t.push(vec![
            zp.re.into(),
            zp.im.into(),
            format!("{:?}", zp.zone()?).as_str().into(),
            "slope".into(),
            "".into(),
            sl(&e0),
            sl(&e1),
            sl(&e2),
            "".into(),
        ]);
    }
    t.write(&ctx.out, "dtn_check", ctx.json)?;
    print!("{}", String::from_utf8_lossy(&t.to_csv()?));

    if let Some(comp) = &sc.composition {
        let disk = cfg.disk()?;
        let media = comp.media.clone().unwrap_or_else(|| disk.media());
        let geom = disk.geometry();
        let circ = geom.circumference();
        let mut ct = Table::new(&["z_re", "z_im", "zone", "h", "max_mode", "defect"]);
        for zp in &sc.z {
            let mut ds = Vec::new();
            for &h in &sc.h {
                let sp = zp.point(h)?;
                // xi nodes on every mode frequency the product can reach.
                let k = comp.max_mode + comp.nx / 2;
                let xi_step = std::f64::consts::TAU * h / circ;
                let grid = GridSpec::new(comp.nx, 2 * k + 1, xi_step * k as f64)?;
                let a_minus = inversion_symbol(&media, &sp, &geom, &grid)?;
                let a_plus = a_minus.map(|v| 1.0 / v);
                let d = composition_defect(&a_plus, &a_minus, h, comp.max_mode, ctx.seed)?;
                ct.push(vec![
                    zp.re.into(),
                    zp.im.into(),
                    format!("{:?}", zp.zone()?).as_str().into(),
                    h.into(),
                    comp.max_mode.into(),
                    d.into(),
                ]);
                ds.push(d);
            }
            ct.push(vec![
                zp.re.into(),
                zp.im.into(),
                format!("{:?}", zp.zone()?).as_str().into(),
                "slope".into(),
                "".into(),
                Cell::Num(loglog_slope(&sc.h, &ds).unwrap_or(f64::NAN)),
            ]);
        }
        ct.write(&ctx.out, "composition", ctx.json)?;
    }
    Ok(())
}

pub fn parametrix_check(cfg: &RunConfig, ctx: &Context) -> Result<(), Failure> {
    let sc = semiclassical(cfg)?;
    let (c, n) = cfg.single_medium();
    let grid = match sc.grid {
        Some(g) => GridSpec::new(g.nx, g.nxi, g.xi_max)?,
        None => GridSpec::new(16, 129, 5.7)?,
    };
    let form = DiskNormalForm { radius: cfg.disk.radius, c, n };
    let jet = form.jet(sc.order)?;
    let order = sc.order;
    let mut header = vec!["z_re".to_string(), "z_im".to_string(), "zone".to_string(), "x1".to_string()];
    header.push("eikonal_ratio".into());
    header.extend((0..=order).map(|p| format!("transport_h{p}_ratio")));
    let mut t = Table { header, rows: Vec::new() };
    let mut pb = Table::new(&["z_re", "z_im", "zone", "delta", "passes", "min_margin", "delta_star"]);
    let h = sc.h[0];
    for zp in &sc.z {
        let sp = zp.point(h)?;
        let ph = solve_eikonal(&jet, &sp, &grid)?;
        let amp = solve_transport(&jet, &ph, &BoundaryFunction::constant(1.0), TransportForm::Conjugated)?;
        let samples = residual_ratios(&form, &ph, &amp, &sc.x1);
        let zone = format!("{:?}", zp.zone()?);
        for s in &samples {
            let mut row: Vec<Cell> = vec![zp.re.into(), zp.im.into(), zone.as_str().into(), s.x1.into(), s.eikonal_ratio.into()];
            row.extend(s.transport_ratio.iter().map(|&v| Cell::Num(v)));
            t.push(row);
        }
        // Slope of each ratio against x1: bounded ratios give slopes near 0.
        let xs: Vec<f64> = samples.iter().map(|s| s.x1).collect();
        let mut row: Vec<Cell> = vec![zp.re.into(), zp.im.into(), zone.as_str().into(), "slope".into()];
        let e: Vec<f64> = samples.iter().map(|s| s.eikonal_ratio).collect();
        row.push(Cell::Num(loglog_slope(&xs, &e).unwrap_or(f64::NAN)));
        for p in 0..=order {
            let v: Vec<f64> = samples.iter().map(|s| s.transport_ratio[p]).collect();
            row.push(Cell::Num(loglog_slope(&xs, &v).unwrap_or(f64::NAN)));
        }
        t.push(row);
        let rep = phase_lower_bound_check(&ph, 0.5, 1.0)?;
        pb.push(vec![
            zp.re.into(),
            zp.im.into(),
            zone.as_str().into(),
            rep.delta.into(),
            rep.passes.into(),
            rep.min_margin.into(),
            rep.delta_star.into(),
        ]);
    }
    t.write(&ctx.out, "parametrix_check", ctx.json)?;
    pb.write(&ctx.out, "phase_bound", ctx.json)?;
    print!("{}", String::from_utf8_lossy(&t.to_csv()?));
    print!("{}", String::from_utf8_lossy(&pb.to_csv()?));
    Ok(())
}

pub fn count(cfg: &RunConfig, ctx: &Context) -> Result<(), Failure> {
    let rs = &cfg.counting.as_ref().ok_or_else(|| Failure::invalid("count needs a `counting` section".into()))?.r;
    let disk = cfg.disk()?;
    let rmax = rs.iter().cloned().fold(0.0, f64::max);
    let r2 = rmax * rmax;
    let region = ScanRegion::new(-r2, r2, -r2, r2)?;
    let s: Spectrum = spectrum(&disk, &region, k_max_for(cfg, &disk, &region), &options(cfg))?;
    let rows = weyl_compare(&s, &disk, rs)?;
    let mut t = Table::new(&[
        "r",
        "count",
        "predicted",
        "ratio",
        "negative_count",
        "negative_predicted",
        "negative_ratio",
    ]);
    let opt = |v: Option<f64>| Cell::Num(v.unwrap_or(f64::NAN));
    for w in &rows {
        t.push(vec![
            w.r.into(),
            Cell::Int(w.count as i64),
            w.predicted.into(),
            w.ratio.into(),
            w.negative_count.map_or(Cell::Text(String::new()), |v| Cell::Int(v as i64)),
            opt(w.negative_predicted),
            opt(w.negative_ratio),
        ]);
    }
    let counts: Vec<f64> = rows.iter().map(|w| w.count as f64).collect();
    let negs: Vec<f64> = rows.iter().filter_map(|w| w.negative_count.map(|v| v as f64)).collect();
    t.push(vec![
        "slope".into(),
        Cell::Num(loglog_slope(rs, &counts).unwrap_or(f64::NAN)),
        "".into(),
        "".into(),
        if negs.len() == rs.len() {
            Cell::Num(loglog_slope(rs, &negs).unwrap_or(f64::NAN))
        } else {
            Cell::Text(String::new())
        },
        "".into(),
        "".into(),
    ]);
    t.write(&ctx.out, "count", ctx.json)?;
    print!("{}", String::from_utf8_lossy(&t.to_csv()?));
    Ok(())
}
