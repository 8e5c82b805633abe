//! Binary field snapshots.
//!
//! Layout: magic `BVLF`, `u32` version, `u64` header length, a JSON header
//! describing the mesh (curve, radial levels, angular parameters) and `ε`, `η`,
//! then the nodal values as little-endian `f64` pairs.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use bvlab_core::{BoundaryCurve, Domain, VectorField2D};

const MAGIC: &[u8; 4] = b"BVLF";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveRecord {
    Disk { radius: f64 },
    Fourier { radius: f64, coeffs: Vec<(f64, u32)> },
    Ellipse { a: f64, b: f64 },
}

impl From<&BoundaryCurve> for CurveRecord {
    fn from(c: &BoundaryCurve) -> Self {
        match c {
            BoundaryCurve::Disk { radius } => CurveRecord::Disk { radius: *radius },
            BoundaryCurve::Fourier { radius, coeffs } => CurveRecord::Fourier { radius: *radius, coeffs: coeffs.clone() },
            BoundaryCurve::Ellipse { a, b } => CurveRecord::Ellipse { a: *a, b: *b },
        }
    }
}

impl From<CurveRecord> for BoundaryCurve {
    fn from(c: CurveRecord) -> Self {
        match c {
            CurveRecord::Disk { radius } => BoundaryCurve::Disk { radius },
            CurveRecord::Fourier { radius, coeffs } => BoundaryCurve::Fourier { radius, coeffs },
            CurveRecord::Ellipse { a, b } => BoundaryCurve::Ellipse { a, b },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    curve: CurveRecord,
    radial: Vec<f64>,
    params: Vec<f64>,
    eps: f64,
    eta: f64,
    n_nodes: usize,
}

pub fn write_field(u: &VectorField2D, w: &mut impl Write) -> Result<()> {
    let d = &u.domain;
    let header = Header {
        curve: (&d.curve).into(),
        radial: d.radial.clone(),
        params: d.params.clone(),
        eps: u.eps,
        eta: u.eta,
        n_nodes: u.values.len(),
    };
    let h = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(h.len() as u64).to_le_bytes())?;
    w.write_all(&h)?;
    for v in &u.values {
        w.write_all(&v[0].to_le_bytes())?;
        w.write_all(&v[1].to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field(r: &mut impl Read) -> Result<VectorField2D> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        bail!("not a field snapshot");
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        bail!("unsupported snapshot version {version}");
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let len = u64::from_le_bytes(b8) as usize;
    let mut h = vec![0u8; len];
    r.read_exact(&mut h)?;
    let header: Header = serde_json::from_slice(&h).context("snapshot header")?;
    let domain = Domain::build(header.curve.into(), header.radial, header.params)?;
    if domain.mesh.n_nodes() != header.n_nodes {
        bail!("snapshot has {} values for a mesh of {} nodes", header.n_nodes, domain.mesh.n_nodes());
    }
    let mut values = Vec::with_capacity(header.n_nodes);
    for _ in 0..header.n_nodes {
        r.read_exact(&mut b8)?;
        let x = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        values.push([x, f64::from_le_bytes(b8)]);
    }
    Ok(VectorField2D::new(Arc::new(domain), values, header.eps, header.eta)?)
}

pub fn save(u: &VectorField2D, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    write_field(u, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<VectorField2D> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?);
    read_field(&mut f).with_context(|| format!("reading {}", path.display()))
}
