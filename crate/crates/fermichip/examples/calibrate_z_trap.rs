//! Tunes the Z-wire central length and the in-plane bias so that
//! K40 |9/2,9/2> sits 190 μm above the chip with radial and axial
//! frequencies of 823 Hz and 46 Hz, at a wire current of 2 A. Prints the
//! resulting layout and its trap depth.

use std::f64::consts::PI;

use fermichip_core::constants::k40_stretched;
use fermichip_core::field::{find_minimum, trap_depth, trap_frequencies, ZTrapLayout};
use fermichip_core::Vec3;
use nalgebra::{Matrix3, Vector3};

const LEAD: f64 = 5e-3;
const CURRENT: f64 = 2.0;
const HEIGHT: f64 = 190e-6;
const RADIAL_HZ: f64 = 823.0;
const AXIAL_HZ: f64 = 46.0;

struct Outcome {
    height: f64,
    radial_hz: f64,
    axial_hz: f64,
    b0: f64,
}

/// `p` = (central length in mm, −B_x in G, −B_y in G).
fn layout(p: &Vector3<f64>) -> ZTrapLayout {
    ZTrapLayout {
        central_length: p[0] * 1e-3,
        lead_length: LEAD,
        current: CURRENT,
        bias: Vec3::new(-p[1] * 1e-4, -p[2] * 1e-4, 0.0),
    }
}

fn evaluate(p: &Vector3<f64>) -> fermichip_core::Result<Outcome> {
    let model = layout(p).build()?;
    let k = k40_stretched();
    let min = find_minimum(&model, Vec3::new(0.0, 0.0, HEIGHT))?;
    let tf = trap_frequencies(&model, &k, min.position)?.along_axes();
    Ok(Outcome {
        height: min.position[2],
        radial_hz: (tf[0] * tf[2]).sqrt() / (2.0 * PI),
        axial_hz: tf[1] / (2.0 * PI),
        b0: min.b0,
    })
}

fn residual(o: &Outcome) -> Vector3<f64> {
    Vector3::new(
        o.height / HEIGHT - 1.0,
        (o.radial_hz / RADIAL_HZ).ln(),
        (o.axial_hz / AXIAL_HZ).ln(),
    )
}

fn main() -> fermichip_core::Result<()> {
    let mut p = Vector3::new(1.8, 21.0, 5.5);
    for it in 0..40 {
        let o = evaluate(&p)?;
        let r = residual(&o);
        println!(
            "it {it}: L={:.5}mm Bx={:.5}G By={:.5}G | h={:.3}um wr={:.2}Hz wa={:.3}Hz B0={:.4}G",
            p[0],
            p[1],
            p[2],
            o.height * 1e6,
            o.radial_hz,
            o.axial_hz,
            o.b0 * 1e4
        );
        if r.norm() < 1e-6 {
            break;
        }
        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let mut q = p;
            q[j] *= 1.0 + 1e-4;
            let rq = residual(&evaluate(&q)?);
            jac.set_column(j, &((rq - r) / (p[j] * 1e-4)));
        }
        let step = jac.lu().solve(&(-r)).expect("regular Jacobian");
        let mut scale = 1.0;
        for j in 0..3 {
            let lim = 0.1 * p[j].abs();
            if step[j].abs() * scale > lim {
                scale = lim / step[j].abs();
            }
        }
        p += step * scale;
    }
    let l = layout(&p);
    let model = l.build()?;
    let k = k40_stretched();
    let min = find_minimum(&model, Vec3::new(0.0, 0.0, HEIGHT))?;
    let depth = trap_depth(&model, &k, min.position)?;
    println!(
        "central_length_um={:.6} lead_length_um={:.1} current_A={} bias_G=[{:.8}, {:.8}, 0] depth_mK={:.4}",
        l.central_length * 1e6,
        l.lead_length * 1e6,
        l.current,
        l.bias[0] * 1e4,
        l.bias[1] * 1e4,
        depth.temperature * 1e3
    );
    Ok(())
}
