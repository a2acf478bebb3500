//! CSV writers. Numbers are printed with 17 significant digits, '.' as
//! the decimal mark and ',' as separator.

use std::io::{self, Write};

use crate::classification::IntegralPoint;
use crate::flows::TrajectoryPoint;
use crate::series::Evaluation;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rows `t, re, im, trunc_bound`.
pub fn write_eval_csv<W: Write + ?Sized>(w: &mut W, rows: &[(f64, Evaluation)]) -> io::Result<()> {
    writeln!(w, "t,re,im,trunc_bound")?;
    for (t, e) in rows {
        writeln!(w, "{},{},{},{}", num(*t), num(e.value.re), num(e.value.im), num(e.error_bound))?;
    }
    Ok(())
}

/// Rows `t, s, angle_1, ..., angle_D`.
pub fn write_trajectory_csv<W: Write + ?Sized>(w: &mut W, rows: &[TrajectoryPoint]) -> io::Result<()> {
    let depth = rows.first().map_or(0, |r| r.point.depth());
    let mut header = String::from("t,s");
    for j in 1..=depth {
        header.push_str(&format!(",angle_{j}"));
    }
    writeln!(w, "{header}")?;
    for r in rows {
        let mut line = format!("{},{}", num(r.t), num(r.s));
        for a in r.point.angles() {
            line.push(',');
            line.push_str(&num(*a));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Rows `T, I_real, I_imag, truncation_bound`.
pub fn write_integral_csv<W: Write + ?Sized>(w: &mut W, rows: &[IntegralPoint]) -> io::Result<()> {
    writeln!(w, "T,I_real,I_imag,truncation_bound")?;
    for p in rows {
        writeln!(
            w,
            "{},{},{},{}",
            num(p.t),
            num(p.value.re),
            num(p.value.im),
            num(p.truncation_bound)
        )?;
    }
    Ok(())
}
