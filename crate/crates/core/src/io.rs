//! Self-describing binary dumps and plot-ready CSV export.
//!
//! Binary layout, little-endian throughout:
//!
//! ```text
//! "CHKN"  u32 version  u32 N  u32 G[0..N]  f64 L_λ[0..N]  f64 L_μ[0..N]
//! f64 ħ  f64 ω  u8 tag  then (re, im) f64 pairs in row-major order
//! ```
//!
//! Tags: 0 normal, 1 symmetric, 2 antinormal, 3 classical, 4 Wigner.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::evolution::MonitorReport;
use crate::grid::{CharField, GridSpec, Ordering, PhaseGrid};
use crate::wigner::WignerField;

pub const MAGIC: &[u8; 4] = b"CHKN";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DumpTag {
    Char(Ordering),
    Wigner,
}

impl DumpTag {
    pub fn code(self) -> u8 {
        match self {
            DumpTag::Char(Ordering::Normal) => 0,
            DumpTag::Char(Ordering::Symmetric) => 1,
            DumpTag::Char(Ordering::Antinormal) => 2,
            DumpTag::Char(Ordering::Classical) => 3,
            DumpTag::Wigner => 4,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => DumpTag::Char(Ordering::Normal),
            1 => DumpTag::Char(Ordering::Symmetric),
            2 => DumpTag::Char(Ordering::Antinormal),
            3 => DumpTag::Char(Ordering::Classical),
            4 => DumpTag::Wigner,
            other => return Err(Error::Format(format!("unknown ordering tag {other}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            DumpTag::Char(o) => o.name(),
            DumpTag::Wigner => "wigner",
        }
    }
}

/// Contents of a binary dump.
#[derive(Clone, Debug, PartialEq)]
pub struct Dump {
    pub grid: PhaseGrid,
    pub tag: DumpTag,
    pub data: Vec<C64>,
}

impl Dump {
    pub fn from_charfield(c: &CharField) -> Self {
        Dump {
            grid: c.grid().clone(),
            tag: DumpTag::Char(c.ordering()),
            data: c.data().to_vec(),
        }
    }

    pub fn from_wigner(w: &WignerField) -> Self {
        Dump {
            grid: w.grid.clone(),
            tag: DumpTag::Wigner,
            data: w.data.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }

    pub fn into_charfield(self) -> Result<CharField> {
        match self.tag {
            DumpTag::Char(o) => CharField::new(self.grid, self.data, o),
            DumpTag::Wigner => Err(Error::Format("dump holds a Wigner function".into())),
        }
    }

    pub fn into_wigner(self) -> Result<WignerField> {
        if self.tag != DumpTag::Wigner {
            return Err(Error::Format(format!(
                "dump holds a {} field",
                self.tag.name()
            )));
        }
        Ok(WignerField {
            grid: self.grid,
            data: self.data.iter().map(|z| z.re).collect(),
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(g.dims() as u32).to_le_bytes())?;
        for &n in g.points() {
            w.write_all(&(n as u32).to_le_bytes())?;
        }
        for v in g.extent_lambda().iter().chain(g.extent_mu()) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&g.hbar().to_le_bytes())?;
        w.write_all(&g.omega().to_le_bytes())?;
        w.write_all(&[self.tag.code()])?;
        for z in &self.data {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dims = read_u32(&mut r)? as usize;
        if dims == 0 || dims > 8 {
            return Err(Error::Format(format!("implausible dimension count {dims}")));
        }
        let points = (0..dims)
            .map(|_| read_u32(&mut r).map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let extent_lambda = (0..dims)
            .map(|_| read_f64(&mut r))
            .collect::<Result<Vec<_>>>()?;
        let extent_mu = (0..dims)
            .map(|_| read_f64(&mut r))
            .collect::<Result<Vec<_>>>()?;
        let hbar = read_f64(&mut r)?;
        let omega = read_f64(&mut r)?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let tag = DumpTag::from_code(tag[0])?;
        let spec = GridSpec {
            dims,
            points,
            extent_lambda,
            extent_mu,
            hbar,
            omega,
        };
        let grid =
            PhaseGrid::new(&spec).map_err(|e| Error::Format(format!("bad grid header: {e}")))?;
        let mut data = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            data.push(C64::new(re, im));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after samples".into()));
        }
        Ok(Dump { grid, tag, data })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Dump::read_from(BufReader::new(File::open(path)?))
    }

    /// One row per node: coordinates (`λ…, μ…` or `x…, p…`), `re`, `im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        let n = g.dims();
        let (a, b) = if self.tag == DumpTag::Wigner {
            ("x", "p")
        } else {
            ("lambda", "mu")
        };
        let mut header: Vec<String> = (0..n).map(|i| format!("{a}{i}")).collect();
        header.extend((0..n).map(|i| format!("{b}{i}")));
        header.push("re".into());
        header.push("im".into());
        writeln!(w, "{}", header.join(","))?;
        for (i, z) in self.data.iter().enumerate() {
            let pt = if self.tag == DumpTag::Wigner {
                g.dual_point(i)
            } else {
                g.point(i)
            };
            let coords: Vec<String> = pt.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{},{:.17e},{:.17e}", coords.join(","), z.re, z.im)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }
}

/// Monitor table: `t`, normalization drift, hermiticity defect, bound
/// violation.
pub fn write_monitor_csv<W: Write>(mut w: W, reports: &[MonitorReport]) -> Result<()> {
    writeln!(w, "t,norm_defect,herm_defect,bound_defect")?;
    for r in reports {
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            r.t, r.normalization_drift, r.hermiticity, r.bound_violation
        )?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated dump".into())
    } else {
        Error::Io(e)
    }
}
