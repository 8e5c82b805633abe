//! `angle:degree` vortex lists such as `"0:+1,pi:+1"` or `"pi/2:+2"`.

use std::f64::consts::PI;

use anyhow::{anyhow, bail, Result};
use bvlab_core::{Vortex, VortexSet};

/// Numbers, `pi`, `k*pi`, `kpi`, `pi/m` and `kpi/m`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let s = s.trim().to_ascii_lowercase();
    if let Ok(x) = s.parse::<f64>() {
        return Ok(x);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim().to_string(), d.trim().parse::<f64>().map_err(|_| anyhow!("bad angle `{s}`"))?),
        None => (s.clone(), 1.0),
    };
    let Some(k) = num.strip_suffix("pi") else { bail!("bad angle `{s}`") };
    let k = k.trim().trim_end_matches('*');
    let k = match k {
        "" | "+" => 1.0,
        "-" => -1.0,
        k => k.parse::<f64>().map_err(|_| anyhow!("bad angle `{s}`"))?,
    };
    Ok(k * PI / den)
}

pub fn parse_vortices(s: &str) -> Result<VortexSet> {
    let mut v = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (a, d) = item.split_once(':').ok_or_else(|| anyhow!("expected angle:degree, got `{item}`"))?;
        let d: i32 = d.trim().trim_start_matches('+').parse().map_err(|_| anyhow!("bad degree in `{item}`"))?;
        v.push(Vortex { t: parse_angle(a)?, d });
    }
    Ok(VortexSet::new(v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0").unwrap(), 0.0);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("3pi/2").unwrap(), 1.5 * PI);
        assert_eq!(parse_angle("-pi/4").unwrap(), -0.25 * PI);
        assert_eq!(parse_angle("2*pi/3").unwrap(), 2.0 * PI / 3.0);
        assert!(parse_angle("tau").is_err());
    }

    #[test]
    fn lists() {
        let v = parse_vortices("0:+1, pi:+1").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.vortices[1].t, PI);
        assert_eq!(parse_vortices("1:2").unwrap().vortices[0].d, 2);
        assert!(parse_vortices("0:+1").is_err());
        assert!(parse_vortices("0:+1 pi:+1").is_err());
    }
}
