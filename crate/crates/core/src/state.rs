use alloc::vec;
use alloc::vec::Vec;

/// Solution values at the interior nodes at one time stamp.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateVector {
    pub values: Vec<f64>,
    pub t: f64,
}

impl StateVector {
    pub fn new(values: Vec<f64>, t: f64) -> Self {
        Self { values, t }
    }

    pub fn zeros(n: usize, t: f64) -> Self {
        Self {
            values: vec![0.0; n],
            t,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
