use zeipel::elements::{
    cartesian_to_kep, delaunay_to_kep, kep_to_cartesian, kep_to_delaunay, CartesianState, DelaunayState,
};
use zeipel::propagator::{compare, halving_experiment, propagate_analytic, propagate_oracle, successive_ratios, HalvingConfig};
use zeipel::verify::{run_suite, VerifyConfig};
use zeipel::{Exec, KeplerianElements, PhysicalModel};

use crate::config::RunConfig;
use crate::error::{input, CliError};
use crate::output::{ephemeris_csv, write_file, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Repr {
    /// a e i raan argp M
    Kep,
    /// L G H l g h
    Delaunay,
    /// x y z vx vy vz
    Cart,
}

impl Repr {
    fn header(self) -> &'static str {
        match self {
            Repr::Kep => "a,e,i,raan,argp,M",
            Repr::Delaunay => "L,G,H,l,g,h",
            Repr::Cart => "x,y,z,vx,vy,vz",
        }
    }
}

pub fn propagate(cfg: &RunConfig, oracle: bool) -> Result<String, CliError> {
    cfg.validate()?;
    let model = cfg.physical_model()?;
    let el = cfg.initial_elements()?;
    let times = cfg.time.grid()?;
    let dir = &cfg.output.dir;

    let analytic = propagate_analytic(&el, &times, &model, cfg.order()?, Exec::default())?;
    let path = write_file(dir, "analytic.csv", &ephemeris_csv(&analytic))?;
    let mut msg = format!("wrote {} ({} rows)\n", path.display(), analytic.len());
    if oracle {
        let run = propagate_oracle(&kep_to_cartesian(&el, &model)?, &times, &model, cfg.oracle.nmax)?;
        let path = write_file(dir, "oracle.csv", &ephemeris_csv(&run.ephemeris))?;
        msg.push_str(&format!(
            "wrote {} ({} rows, {} steps, energy drift {:.3e})\n",
            path.display(),
            run.ephemeris.len(),
            run.steps,
            run.energy_drift
        ));
    }
    Ok(msg)
}

pub fn compare_cmd(cfg: &RunConfig, oracle: bool) -> Result<String, CliError> {
    if !oracle {
        return Err(CliError::Usage("compare needs --oracle".into()));
    }
    cfg.validate()?;
    let model = cfg.physical_model()?;
    let el = cfg.initial_elements()?;
    let order = cfg.order()?;
    let times = cfg.time.grid()?;

    let analytic = propagate_analytic(&el, &times, &model, order, Exec::default())?;
    let run = propagate_oracle(&kep_to_cartesian(&el, &model)?, &times, &model, cfg.oracle.nmax)?;
    let m = compare(&analytic, &run.ephemeris)?;

    let mut r = Report::default();
    r.value("order", f64::from(order.as_int()));
    r.value("samples", times.len() as f64);
    r.value("max_position_error_km", m.max_position_error);
    r.value("rms_position_error_km", m.rms_position_error);
    for (name, v) in ["a", "e", "i", "raan", "argp", "M"].iter().zip(m.max_element_errors) {
        r.value(&format!("max_error_{name}"), v);
    }
    r.value("oracle_energy_drift", run.energy_drift);
    r.value("oracle_hz_drift", run.hz_drift);

    let h = HalvingConfig {
        orbits: cfg.halving.orbits,
        samples_per_orbit: cfg.halving.samples_per_orbit,
        levels: cfg.halving.levels,
        order,
        ..Default::default()
    };
    let rows = halving_experiment(&el, &model, &h)?;
    let pos: Vec<f64> = rows.iter().map(|r| r.max_position_error).collect();
    let ratios = successive_ratios(&pos);
    let table: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let ratio = if k == 0 { f64::NAN } else { ratios[k - 1] };
            vec![
                row.j2,
                row.max_position_error,
                ratio,
                row.mean_momenta_range[0],
                row.mean_momenta_range[1],
                row.mean_momenta_range[2],
                row.oracle_energy_drift,
            ]
        })
        .collect();
    r.table(
        "j2 halving",
        &["j2", "max_position_error_km", "ratio", "range_L", "range_G", "range_H", "energy_drift"],
        &table,
    );
    let path = write_file(&cfg.output.dir, "compare.txt", r.as_str())?;
    Ok(format!("{}wrote {}\n", r.as_str(), path.display()))
}

pub fn verify(cfg: &RunConfig) -> Result<String, CliError> {
    let vc = VerifyConfig {
        seed: cfg.verify.seed,
        model: cfg.physical_model()?,
        tolerance: cfg.verify.tolerance,
        exec: Exec::default(),
    };
    input(zeipel::CanonicalMap::new(&vc.model, zeipel::Order::Second))?;
    let report = run_suite(&vc);
    if report.passed() {
        Ok(report.to_text())
    } else {
        print!("{}", report.to_text());
        Err(CliError::Verification(report.failures().join(", ")))
    }
}

pub fn elements(model: &PhysicalModel, from: Repr, to: Repr, values: &[f64]) -> Result<String, CliError> {
    let v: [f64; 6] = values
        .try_into()
        .map_err(|_| CliError::Usage(format!("expected 6 values, got {}", values.len())))?;
    let kep = match from {
        Repr::Kep => input(KeplerianElements::new(v[0], v[1], v[2], v[3], v[4], v[5]))?,
        Repr::Delaunay => input(delaunay_to_kep(&DelaunayState::from_array(v), model))?,
        Repr::Cart => input(cartesian_to_kep(&CartesianState::from_array(&v), model))?,
    };
    let out = match to {
        Repr::Kep => kep.to_array(),
        Repr::Delaunay => input(kep_to_delaunay(&kep, model))?.to_array(),
        Repr::Cart => input(kep_to_cartesian(&kep, model))?.to_array(),
    };
    let row: Vec<String> = out.iter().map(|x| format!("{x:.16e}")).collect();
    Ok(format!("{}\n{}\n", to.header(), row.join(",")))
}

