//! Output formatting shared by the CSV exports and the SVG sweep plot.
//!
//! CSV uses '.' decimals, ',' separators, LF line endings, and 17
//! significant digits so round trips are bit-stable.

/// Format a float with 17 significant digits (scientific form).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.16e}")
}

/// A minimal line plot with two curves and a relative-error inset, written
/// as a standalone SVG document.
pub struct SweepPlot<'a> {
    pub title: &'a str,
    /// (ε, value) points of the residue-series curve.
    pub residue: Vec<(f64, f64)>,
    /// (ε, value) points of the direct-sum curve.
    pub direct: Vec<(f64, f64)>,
    /// (ε, relative error) points for the inset.
    pub rel_err: Vec<(f64, f64)>,
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;

impl SweepPlot<'_> {
    pub fn write_svg<Wr: std::io::Write>(&self, mut out: Wr) -> std::io::Result<()> {
        let pts: Vec<(f64, f64)> = self
            .residue
            .iter()
            .chain(self.direct.iter())
            .copied()
            .collect();
        let (x0, x1) = bounds(pts.iter().map(|p| p.0));
        let (y0, y1) = bounds(pts.iter().map(|p| p.1));
        let sx = |x: f64| MARGIN + (x - x0) / span(x0, x1) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y0) / span(y0, y1) * (H - 2.0 * MARGIN);

        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        )?;
        writeln!(
            out,
            r#"<rect width="{W}" height="{H}" fill="white" stroke="none"/>"#
        )?;
        writeln!(
            out,
            r#"<text x="{}" y="24" font-family="monospace" font-size="14">{}</text>"#,
            MARGIN, self.title
        )?;
        // Axes.
        writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            MARGIN,
            H - MARGIN,
            W - MARGIN,
            H - MARGIN
        )?;
        writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            MARGIN,
            MARGIN,
            MARGIN,
            H - MARGIN
        )?;
        for (label, x) in [(x0, x0), (x1, x1)] {
            writeln!(
                out,
                r#"<text x="{}" y="{}" font-family="monospace" font-size="11" text-anchor="middle">{:.4}</text>"#,
                sx(x),
                H - MARGIN + 16.0,
                label
            )?;
        }
        for (label, y) in [(y0, y0), (y1, y1)] {
            writeln!(
                out,
                r#"<text x="{}" y="{}" font-family="monospace" font-size="11" text-anchor="end">{:.4}</text>"#,
                MARGIN - 6.0,
                sy(y) + 4.0,
                label
            )?;
        }
        write_polyline(&mut out, &self.residue, sx, sy, "#1f77b4", 2.0)?;
        write_polyline(&mut out, &self.direct, sx, sy, "#d62728", 1.2)?;
        writeln!(
            out,
            r##"<text x="{}" y="40" font-family="monospace" font-size="12" fill="#1f77b4">residue series</text>"##,
            MARGIN
        )?;
        writeln!(
            out,
            r##"<text x="{}" y="56" font-family="monospace" font-size="12" fill="#d62728">direct sum</text>"##,
            MARGIN
        )?;

        // Relative-error inset, log scale.
        if !self.rel_err.is_empty() {
            let ix = W - MARGIN - 220.0;
            let iy = MARGIN + 10.0;
            let (iw, ih) = (200.0, 120.0);
            let logs: Vec<(f64, f64)> = self
                .rel_err
                .iter()
                .map(|&(x, e)| (x, e.max(1e-18).log10()))
                .collect();
            let (e0, e1) = bounds(logs.iter().map(|p| p.1));
            writeln!(
                out,
                r##"<rect x="{ix}" y="{iy}" width="{iw}" height="{ih}" fill="#f8f8f8" stroke="gray"/>"##
            )?;
            let isx = |x: f64| ix + (x - x0) / span(x0, x1) * iw;
            let isy = |e: f64| iy + ih - (e - e0) / span(e0, e1) * ih;
            write_polyline(&mut out, &logs, isx, isy, "#2ca02c", 1.5)?;
            writeln!(
                out,
                r#"<text x="{}" y="{}" font-family="monospace" font-size="10">log10 rel err</text>"#,
                ix + 4.0,
                iy + 12.0
            )?;
        }
        writeln!(out, "</svg>")
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn span(a: f64, b: f64) -> f64 {
    if b > a {
        b - a
    } else {
        1.0
    }
}

fn write_polyline<Wr: std::io::Write>(
    out: &mut Wr,
    pts: &[(f64, f64)],
    sx: impl Fn(f64) -> f64,
    sy: impl Fn(f64) -> f64,
    color: &str,
    width: f64,
) -> std::io::Result<()> {
    if pts.is_empty() {
        return Ok(());
    }
    let path: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
        path.join(" ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_17_digits_and_stable() {
        let x = 0.36;
        let s = fmt_f64(x);
        assert_eq!(s, "3.5999999999999999e-1");
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, x);
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let plot = SweepPlot {
            title: "test",
            residue: vec![(0.1, 1.0), (0.2, 2.0)],
            direct: vec![(0.1, 1.01), (0.2, 1.99)],
            rel_err: vec![(0.1, 1e-3), (0.2, 1e-4)],
        };
        let mut buf = Vec::new();
        plot.write_svg(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert_eq!(text.matches("<polyline").count(), 3);
    }
}
