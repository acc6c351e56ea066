//! Grid CSV with a `.meta` sidecar, and the argmax CSV of a convolution.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::convolve::ConvolutionResult;
use crate::error::{Error, Result};
use crate::field::{Domain, GridFunction};
use crate::geometry::{ConvexBody, Vec2};

pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta")
}

/// `x,y,value` for every node of the closed body, row-major.
pub fn grid_csv(gf: &GridFunction) -> String {
    let lat = *gf.lattice();
    let mut s = String::from("x,y,value\n");
    for j in 0..lat.ny {
        for i in 0..lat.nx {
            if gf.kind(i, j).in_closure() {
                let x = lat.node(i, j);
                let _ = writeln!(s, "{},{},{}", x.x, x.y, gf.value(i, j));
            }
        }
    }
    s
}

pub fn grid_meta(gf: &GridFunction) -> String {
    let lat = gf.lattice();
    let o = lat.origin();
    format!(
        "origin = {} {}\nh = {}\nnx = {}\nny = {}\nbody = {}\n",
        o.x,
        o.y,
        lat.h,
        lat.nx,
        lat.ny,
        gf.body().describe()
    )
}

pub fn write_grid(gf: &GridFunction, path: &Path) -> Result<()> {
    fs::write(path, grid_csv(gf))?;
    fs::write(meta_path(path), grid_meta(gf))?;
    Ok(())
}

/// Reads a grid written by [`write_grid`]. The body must be a polygon or a
/// disc literal.
pub fn read_grid(path: &Path) -> Result<GridFunction> {
    let meta = fs::read_to_string(meta_path(path))?;
    let mut h = None;
    let mut body = None;
    for line in meta.lines() {
        if let Some((k, v)) = line.split_once('=') {
            match k.trim() {
                "h" => {
                    h = Some(v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad h {v:?}")))?);
                }
                "body" => body = Some(ConvexBody::parse(v.trim())?),
                _ => {}
            }
        }
    }
    let (h, body) = match (h, body) {
        (Some(h), Some(b)) => (h, b),
        _ => return Err(Error::Parse("metadata needs h and body".into())),
    };
    let domain = Domain::new(&body, h)?;
    let lat = *domain.lattice();
    let mut values = vec![0.0; lat.len()];
    let text = fs::read_to_string(path)?;
    for (n, line) in text.lines().enumerate().skip(1) {
        let f: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("line {}: bad row {line:?}", n + 1)))?;
        let [x, y, v] = f[..] else {
            return Err(Error::Parse(format!("line {}: expected x,y,value", n + 1)));
        };
        let (fx, fy) = lat.locate(Vec2::new(x, y));
        if fx.fract() != 0.0 || fy.fract() != 0.0 || fx < 0.0 || fy < 0.0 {
            return Err(Error::Parse(format!("line {}: ({x}, {y}) is not a node", n + 1)));
        }
        let (i, j) = (fx as usize, fy as usize);
        if i >= lat.nx || j >= lat.ny {
            return Err(Error::Parse(format!("line {}: ({x}, {y}) is off the grid", n + 1)));
        }
        values[lat.index(i, j)] = v;
    }
    GridFunction::from_values(domain, values)
}

/// `x,y,x0,y0,x1,y1,value` for every target node with a maximizer.
pub fn argmax_csv(result: &ConvolutionResult) -> String {
    let lat = *result.field.lattice();
    let mut s = String::from("x,y,x0,y0,x1,y1,value\n");
    for (k, pair) in result.argmax.iter().enumerate() {
        if let Some(p) = pair {
            let x = lat.node(k % lat.nx, k / lat.nx);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                x.x,
                x.y,
                p.x0.x,
                p.x0.y,
                p.x1.x,
                p.x1.y,
                result.field.values()[k]
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        let d = Domain::new(&ConvexBody::disc(Vec2::new(0.1, 0.0), 1.0).unwrap(), 0.125).unwrap();
        let u = GridFunction::from_fn(d, |x| 1.0 - x.norm2() + 0.3 * x.y);
        write_grid(&u, &path).unwrap();
        let back = read_grid(&path).unwrap();
        assert_eq!(back.values(), u.values());
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,value\n"));
        assert!(fs::read_to_string(meta_path(&path)).unwrap().contains("body = disc 0.1 0 1"));
    }
}
