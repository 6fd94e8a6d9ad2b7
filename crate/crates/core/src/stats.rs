use serde::Serialize;

/// Running maximum and mean of absolute values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stat {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl Stat {
    pub fn push(&mut self, v: f64) {
        let a = v.abs();
        // NaN propagates into max so failures are never hidden
        self.max = if a.is_nan() || self.max.is_nan() { f64::NAN } else { self.max.max(a) };
        self.count += 1;
        self.mean += (a - self.mean) / self.count as f64;
    }

    pub fn extend(&mut self, vs: impl IntoIterator<Item = f64>) {
        for v in vs {
            self.push(v);
        }
    }

    pub fn merge(&mut self, o: &Stat) {
        if o.count == 0 {
            return;
        }
        let n = self.count + o.count;
        self.mean = (self.mean * self.count as f64 + o.mean * o.count as f64) / n as f64;
        self.max = if self.max.is_nan() || o.max.is_nan() { f64::NAN } else { self.max.max(o.max) };
        self.count = n;
    }

    /// `max <= tol`, false for NaN.
    pub fn within(&self, tol: f64) -> bool {
        self.max <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulates_absolute_values() {
        let mut s = Stat::default();
        s.extend([1.0, -3.0, 2.0]);
        assert_eq!((s.max, s.count), (3.0, 3));
        assert!((s.mean - 2.0).abs() < 1e-15);
        let mut t = Stat::default();
        t.push(6.0);
        s.merge(&t);
        assert_eq!((s.max, s.count, s.mean), (6.0, 4, 3.0));
        s.push(f64::NAN);
        assert!(!s.within(1e9));
    }
}
