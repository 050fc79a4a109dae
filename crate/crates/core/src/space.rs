//! Bounded, discretized control dimensions.
//!
//! A [`ControlSpace`] is an ordered list of [`ControlDim`]s. Each dimension
//! is split into `bins` equal-width, half-open intervals; the top edge is
//! clamped into the last bin so the mapping from values to bins is total.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlDim {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

impl ControlDim {
    pub fn new(name: impl Into<String>, min: f64, max: f64, bins: usize) -> Result<Self> {
        let dim = Self {
            name: name.into(),
            min,
            max,
            bins,
        };
        dim.validate()?;
        Ok(dim)
    }

    fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::param(format!(
                "dimension `{}` needs finite min < max, got [{}, {}]",
                self.name, self.min, self.max
            )));
        }
        if self.bins == 0 {
            return Err(Error::param(format!(
                "dimension `{}` has zero bins",
                self.name
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn bin_width(&self) -> f64 {
        self.width() / self.bins as f64
    }

    pub fn center(&self, bin: usize) -> f64 {
        self.min + (bin as f64 + 0.5) * self.bin_width()
    }

    fn check(&self, value: f64) -> Result<()> {
        if value.is_nan() || value < self.min || value > self.max {
            return Err(Error::Range {
                dim: self.name.clone(),
                value,
                min: self.min,
                max: self.max,
            });
        }
        Ok(())
    }

    /// Bin index of `value`: half-open intervals, the top edge lands in the last bin.
    pub fn bin_of(&self, value: f64) -> Result<usize> {
        self.check(value)?;
        let raw = ((value - self.min) / self.bin_width()).floor() as usize;
        Ok(raw.min(self.bins - 1))
    }

    pub fn to_unit(&self, value: f64) -> Result<f64> {
        self.check(value)?;
        Ok((value - self.min) / self.width())
    }

    pub fn from_unit(&self, u: f64) -> Result<f64> {
        if u.is_nan() || !(0.0..=1.0).contains(&u) {
            return Err(Error::Range {
                dim: self.name.clone(),
                value: u,
                min: 0.0,
                max: 1.0,
            });
        }
        // Clamp guards the last ulp so that from_unit(1.0) never exceeds max.
        Ok((self.min + u * self.width()).clamp(self.min, self.max))
    }
}

/// A concrete action in dimension units, one value per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionVector(pub Vec<f64>);

/// One bin index per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinnedAction(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ControlDim>", into = "Vec<ControlDim>")]
pub struct ControlSpace {
    dims: Vec<ControlDim>,
}

impl TryFrom<Vec<ControlDim>> for ControlSpace {
    type Error = Error;

    fn try_from(dims: Vec<ControlDim>) -> Result<Self> {
        ControlSpace::new(dims)
    }
}

impl From<ControlSpace> for Vec<ControlDim> {
    fn from(space: ControlSpace) -> Self {
        space.dims
    }
}

impl ControlSpace {
    pub fn new(dims: Vec<ControlDim>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::param("control space needs at least one dimension"));
        }
        for (i, d) in dims.iter().enumerate() {
            d.validate()?;
            if dims[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::param(format!(
                    "duplicate dimension name `{}`",
                    d.name
                )));
            }
        }
        Ok(Self { dims })
    }

    /// The six-dimensional adaptive grasping space, in the order
    /// (theta, alpha, beta, h_g, m_g, f_g).
    pub fn grasping_preset() -> Self {
        let dims = vec![
            ControlDim::new("theta", -180.0, 180.0, 20),
            ControlDim::new("alpha", -10.0, 10.0, 10),
            ControlDim::new("beta", -30.0, 30.0, 10),
            ControlDim::new("h_g", 0.0, 1.0, 5),
            ControlDim::new("m_g", 0.0, 2.0, 3),
            ControlDim::new("f_g", 15.0, 60.0, 20),
        ];
        Self::new(
            dims.into_iter()
                .collect::<Result<_>>()
                .expect("static dims are valid"),
        )
        .expect("static preset is valid")
    }

    /// Unit cube `[0, 1]^k` with `bins` bins per dimension, named `x1..xk`.
    pub fn unit_cube(k: usize, bins: usize) -> Result<Self> {
        Self::new(
            (1..=k)
                .map(|i| ControlDim::new(format!("x{i}"), 0.0, 1.0, bins))
                .collect::<Result<_>>()?,
        )
    }

    pub fn dims(&self) -> &[ControlDim] {
        &self.dims
    }

    pub fn dim(&self, i: usize) -> &ControlDim {
        &self.dims[i]
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.dims.iter().map(|d| d.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    pub fn bin_counts(&self) -> Vec<usize> {
        self.dims.iter().map(|d| d.bins).collect()
    }

    /// Number of cells in the joint discretized grid.
    pub fn joint_bins(&self) -> usize {
        self.dims.iter().map(|d| d.bins).product()
    }

    fn check_len(&self, found: usize, what: &'static str) -> Result<()> {
        if found != self.len() {
            return Err(Error::Shape {
                what,
                expected: self.len(),
                found,
            });
        }
        Ok(())
    }

    pub fn to_unit(&self, a: &ActionVector) -> Result<Vec<f64>> {
        self.check_len(a.0.len(), "action vector")?;
        self.dims
            .iter()
            .zip(&a.0)
            .map(|(d, &v)| d.to_unit(v))
            .collect()
    }

    pub fn from_unit(&self, p: &[f64]) -> Result<ActionVector> {
        self.check_len(p.len(), "unit-cube point")?;
        self.dims
            .iter()
            .zip(p)
            .map(|(d, &u)| d.from_unit(u))
            .collect::<Result<_>>()
            .map(ActionVector)
    }

    pub fn bin_of(&self, a: &ActionVector) -> Result<BinnedAction> {
        self.check_len(a.0.len(), "action vector")?;
        self.dims
            .iter()
            .zip(&a.0)
            .map(|(d, &v)| d.bin_of(v))
            .collect::<Result<_>>()
            .map(BinnedAction)
    }

    pub fn center_of(&self, b: &BinnedAction) -> Result<ActionVector> {
        self.check_len(b.0.len(), "binned action")?;
        self.dims
            .iter()
            .zip(&b.0)
            .map(|(d, &j)| {
                if j >= d.bins {
                    Err(Error::Range {
                        dim: d.name.clone(),
                        value: j as f64,
                        min: 0.0,
                        max: (d.bins - 1) as f64,
                    })
                } else {
                    Ok(d.center(j))
                }
            })
            .collect::<Result<_>>()
            .map(ActionVector)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grasping_preset_matches_table() {
        let s = ControlSpace::grasping_preset();
        assert_eq!(s.len(), 6);
        assert_eq!(
            s.dim(0),
            &ControlDim::new("theta", -180.0, 180.0, 20).unwrap()
        );
        assert_eq!(s.bin_counts(), vec![20, 10, 10, 5, 3, 20]);
        assert_eq!(s.joint_bins(), 600_000);
        assert_eq!(s.dim(5).min, 15.0);
        assert_eq!(s.dim(5).max, 60.0);
    }

    #[test]
    fn unit_map_examples() {
        let s = ControlSpace::grasping_preset();
        let mid = ActionVector(s.dims().iter().map(|d| 0.5 * (d.min + d.max)).collect());
        assert_eq!(s.to_unit(&mid).unwrap(), vec![0.5; 6]);
        let lo = ActionVector(s.dims().iter().map(|d| d.min).collect());
        assert_eq!(s.to_unit(&lo).unwrap(), vec![0.0; 6]);
        let mut a = mid.clone();
        a.0[0] = -90.0;
        assert_eq!(s.to_unit(&a).unwrap()[0], 0.25);
    }

    #[test]
    fn out_of_range_names_dimension() {
        let s = ControlSpace::grasping_preset();
        let mut a = ActionVector(s.dims().iter().map(|d| d.min).collect());
        a.0[2] = 31.0;
        match s.to_unit(&a) {
            Err(Error::Range { dim, .. }) => assert_eq!(dim, "beta"),
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(matches!(s.bin_of(&a), Err(Error::Range { .. })));
        assert!(matches!(
            s.from_unit(&[0.0, 0.0, 1.5, 0.0, 0.0, 0.0]),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn bin_edges() {
        let s = ControlSpace::grasping_preset();
        let lo = ActionVector(s.dims().iter().map(|d| d.min).collect());
        assert_eq!(s.bin_of(&lo).unwrap().0, vec![0; 6]);
        let hi = ActionVector(s.dims().iter().map(|d| d.max).collect());
        assert_eq!(s.bin_of(&hi).unwrap().0, vec![19, 9, 9, 4, 2, 19]);
        assert_eq!(s.dim(0).bin_of(0.0).unwrap(), 10);
    }

    #[test]
    fn center_round_trips_every_bin() {
        let s = ControlSpace::grasping_preset();
        for d in s.dims() {
            for j in 0..d.bins {
                assert_eq!(d.bin_of(d.center(j)).unwrap(), j, "{} bin {j}", d.name);
            }
        }
        assert!(s.center_of(&BinnedAction(vec![20, 0, 0, 0, 0, 0])).is_err());
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(ControlDim::new("x", 1.0, 1.0, 3).is_err());
        assert!(ControlDim::new("x", 0.0, 1.0, 0).is_err());
        let d = ControlDim::new("x", 0.0, 1.0, 2).unwrap();
        assert!(ControlSpace::new(vec![d.clone(), d]).is_err());
        assert!(ControlSpace::new(vec![]).is_err());
    }

    #[test]
    fn serde_round_trip_validates() {
        let s = ControlSpace::grasping_preset();
        let json = serde_json::to_string(&s).unwrap();
        let back: ControlSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let bad = r#"[{"name":"a","min":1.0,"max":0.0,"bins":2}]"#;
        assert!(serde_json::from_str::<ControlSpace>(bad).is_err());
    }

    proptest! {
        #[test]
        fn unit_round_trip(p in proptest::collection::vec(0.0f64..=1.0, 6)) {
            let s = ControlSpace::grasping_preset();
            let back = s.to_unit(&s.from_unit(&p).unwrap()).unwrap();
            for (x, y) in p.iter().zip(&back) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn from_unit_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let d = ControlSpace::grasping_preset().dim(5).clone();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(d.from_unit(lo).unwrap() <= d.from_unit(hi).unwrap());
        }
    }
}
