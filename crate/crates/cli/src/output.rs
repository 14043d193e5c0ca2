//! CSV, JSON and SVG writers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use nls_core::evolution::StepRecord;
use nls_core::Params;

use crate::error::{io, CliError};

pub const CSV_COLUMNS: [&str; 13] = [
    "t",
    "mass",
    "energy",
    "S_omega",
    "K",
    "H_omega",
    "grad_norm_sq",
    "Lp1_norm",
    "Lmc_norm",
    "V_R",
    "V_R_prime",
    "V_R_second",
    "dt",
];

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    fs::write(path, text + "\n").map_err(io)
}

/// Time series streamed one row per step.
pub struct SeriesWriter {
    out: BufWriter<File>,
    p: f64,
    qmc: f64,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl SeriesWriter {
    pub fn create(path: &Path, params: &Params) -> Result<Self, CliError> {
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(out, "{}", CSV_COLUMNS.join(",")).map_err(io)?;
        Ok(Self {
            out,
            p: params.p(),
            qmc: params.mass_critical_exponent(),
        })
    }

    pub fn row(&mut self, r: &StepRecord) -> std::io::Result<()> {
        let b = &r.bundle;
        let (v, vp, vpp) = match r.virial {
            Some(s) => (s.v, s.vp, s.vpp),
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        let cols = [
            r.t,
            b.mass,
            b.energy,
            b.s_omega,
            b.k,
            b.h_omega,
            r.grad_norm_sq,
            b.lp1.powf(1.0 / (self.p + 1.0)),
            b.l_mass_crit.powf(1.0 / self.qmc),
            v,
            vp,
            vpp,
            r.dt,
        ];
        let line: Vec<String> = cols.iter().map(|&x| num(x)).collect();
        writeln!(self.out, "{}", line.join(","))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(io)
    }
}

/// Line plot of one or more curves sharing an x axis.
pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub curves: Vec<(String, Vec<(f64, f64)>)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

impl Plot<'_> {
    pub fn to_svg(&self) -> String {
        let (w, h, m) = (640.0, 400.0, 50.0);
        let pts = self.curves.iter().flat_map(|c| c.1.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !(x1 > x0) {
            x1 = x0 + 1.0;
        }
        if !(y1 > y0) {
            y1 = y0 + 1.0;
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>\n\
             <rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
            w / 2.0,
            self.title,
            w - 2.0 * m,
            h - 2.0 * m
        );
        s += &format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            w / 2.0,
            h - 10.0,
            self.x_label
        );
        for (x, y, anchor, v) in [
            (m, h - m + 15.0, "start", x0),
            (w - m, h - m + 15.0, "end", x1),
            (m - 4.0, h - m, "end", y0),
            (m - 4.0, m + 10.0, "end", y1),
        ] {
            s += &format!("<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\">{v:.3e}</text>\n");
        }
        for (k, (label, data)) in self.curves.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = data
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            s += &format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
                path.join(" ")
            );
            s += &format!(
                "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{label}</text>\n",
                w - m + 4.0 - 120.0,
                m + 15.0 + 14.0 * k as f64
            );
        }
        s + "</svg>\n"
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_svg()).map_err(io)
    }
}
