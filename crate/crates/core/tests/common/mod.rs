#![allow(dead_code)]

use cga_core::instances::{GeneratorSpec, LinkSpec};
use cga_core::{generate_instance, Instance, InstanceSpec};

/// One zone, one generator with capacity cost `capex`, energy cost `varcost` and
/// capacity bound `max_cap`, facing `demand` in each of `periods` one-hour periods.
pub fn toy(demand: f64, varcost: f64, capex: f64, max_cap: f64, periods: usize) -> Instance {
    toy_spec(demand, varcost, capex, max_cap, periods, None)
}

pub fn toy_spec(
    demand: f64,
    varcost: f64,
    capex: f64,
    max_cap: f64,
    periods: usize,
    integral_block: Option<f64>,
) -> Instance {
    generate_instance(&InstanceSpec {
        zones: 1,
        periods,
        hours_per_period: 1,
        integer_mode: integral_block.is_some(),
        integral_block: integral_block.unwrap_or(1.0),
        generators: Some(vec![GeneratorSpec {
            zone: 0,
            tech: "gen".into(),
            capex,
            varcost,
            max_cap,
            availability: vec![1.0; periods],
            integral_block: None,
            emission_rate: 0.0,
        }]),
        demand: Some(vec![vec![demand; periods]]),
        ..InstanceSpec::default()
    })
    .unwrap()
}

/// The canonical toy: demand 1, energy cost 2, capacity cost 1, capacity in [0, 2].
pub fn toy_default() -> Instance {
    toy(1.0, 2.0, 1.0, 2.0, 1)
}

/// Two zones joined by one expandable link and no generators at all.
pub fn generator_free(demand: f64) -> Instance {
    generate_instance(&InstanceSpec {
        zones: 2,
        periods: 1,
        hours_per_period: 1,
        generators: Some(vec![]),
        links: Some(vec![LinkSpec {
            from: 0,
            to: 1,
            capex: 1.0,
            max_cap: 1.0,
            integral_block: None,
        }]),
        demand: Some(vec![vec![demand], vec![0.0]]),
        ..InstanceSpec::default()
    })
    .unwrap()
}

/// Generated instance from the acceptance family.
pub fn family(zones: usize, periods: usize, hours: usize, seed: u64) -> Instance {
    generate_instance(&InstanceSpec {
        zones,
        periods,
        hours_per_period: hours,
        seed,
        ..InstanceSpec::default()
    })
    .unwrap()
}

/// Small integer instance whose planning grid can be enumerated.
pub fn small_integer(zones: usize, periods: usize, hours: usize, seed: u64) -> Instance {
    generate_instance(&InstanceSpec {
        zones,
        periods,
        hours_per_period: hours,
        seed,
        integer_mode: true,
        integral_block: 1.0,
        techs: vec!["thermal".into(), "solar".into()],
        ..InstanceSpec::default()
    })
    .unwrap()
}
