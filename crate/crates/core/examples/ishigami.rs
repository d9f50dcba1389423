//! Sobol indices of the Ishigami function against their closed forms.

use std::f64::consts::PI;

use ablum::sensitivity::{saltelli_sample, sobol_indices, Parameter, ParameterSpace};

fn main() -> ablum::Result<()> {
    let (a, b) = (7.0_f64, 0.1_f64);
    let space = ParameterSpace::new(vec![
        Parameter::new("x1", -PI, PI, false),
        Parameter::new("x2", -PI, PI, false),
        Parameter::new("x3", -PI, PI, false),
    ])?;
    let rows = saltelli_sample(&space, 2048, 0, true)?;
    let y: Vec<f64> = rows
        .iter()
        .map(|x| x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin())
        .collect();
    let idx = sobol_indices(&y, 3, true, 200, 0)?;

    let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = 8.0 * b * b * PI.powi(8) / 225.0;
    let v = v1 + v2 + v13;
    let exact_s1 = [v1 / v, v2 / v, 0.0];
    let exact_st = [(v1 + v13) / v, v2 / v, v13 / v];
    for k in 0..3 {
        println!(
            "x{}  S1 {:.3} ± {:.3} (exact {:.3})   ST {:.3} ± {:.3} (exact {:.3})",
            k + 1,
            idx.s1[k],
            idx.conf.s1[k],
            exact_s1[k],
            idx.st[k],
            idx.conf.st[k],
            exact_st[k]
        );
    }
    if let Some(s2) = &idx.s2 {
        println!("S2(x1,x3) {:.3} (exact {:.3})", s2[0][2], v13 / v);
    }
    Ok(())
}
