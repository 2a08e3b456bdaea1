//! Growing solution history with cubic Hermite dense output.

/// Knots `(t_k, y_k, y'_k)` of an accepted solution plus a constant
/// pre-history returned for every `t <= 0`.
///
/// Lookups are O(1): a bucket table of width close to the nominal step maps
/// `t` to the last knot at or before the bucket start, and a short forward
/// walk finishes the search.
#[derive(Debug, Clone)]
pub struct DenseHistory<const D: usize> {
    times: Vec<f64>,
    inv_widths: Vec<f64>,
    /// `[value, derivative]` per knot, adjacent so a panel reads one block.
    knots: Vec<[[f64; D]; 2]>,
    prehistory: [f64; D],
    bucket_width: f64,
    buckets: Vec<u32>,
}

impl<const D: usize> DenseHistory<D> {
    pub fn new(prehistory: [f64; D], bucket_width: f64) -> Self {
        assert!(bucket_width > 0.0, "bucket width must be positive");
        DenseHistory {
            times: Vec::new(),
            inv_widths: Vec::new(),
            knots: Vec::new(),
            prehistory,
            bucket_width,
            buckets: Vec::new(),
        }
    }

    pub fn with_capacity(prehistory: [f64; D], bucket_width: f64, knots: usize) -> Self {
        let mut h = Self::new(prehistory, bucket_width);
        h.times.reserve(knots);
        h.inv_widths.reserve(knots);
        h.knots.reserve(knots);
        h
    }

    /// Appends a knot; times must be strictly increasing.
    pub fn push(&mut self, t: f64, y: [f64; D], dy: [f64; D]) {
        if let Some(&last) = self.times.last() {
            assert!(t > last, "knot times must increase ({t} after {last})");
            let prev = (self.times.len() - 1) as u32;
            while (self.buckets.len() as f64) * self.bucket_width < t {
                self.buckets.push(prev);
            }
            self.inv_widths.push(1.0 / (t - last));
        }
        self.times.push(t);
        self.knots.push([y, dy]);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn value(&self, k: usize) -> &[f64; D] {
        &self.knots[k][0]
    }

    pub fn deriv(&self, k: usize) -> &[f64; D] {
        &self.knots[k][1]
    }

    pub fn values(&self) -> impl ExactSizeIterator<Item = &[f64; D]> + '_ {
        self.knots.iter().map(|k| &k[0])
    }

    pub fn prehistory(&self) -> &[f64; D] {
        &self.prehistory
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Index `k` of the panel `[t_k, t_{k+1}]` containing `t`.
    ///
    /// Requires at least two knots and `t_0 <= t <= t_last`.
    #[inline]
    pub fn locate(&self, t: f64) -> usize {
        let last_panel = self.times.len() - 2;
        let b = (t / self.bucket_width) as usize;
        let mut k = match self.buckets.get(b) {
            Some(&k) => (k as usize).min(last_panel),
            None => last_panel,
        };
        while k > 0 && self.times[k] > t {
            k -= 1;
        }
        while k < last_panel && self.times[k + 1] <= t {
            k += 1;
        }
        k
    }

    /// Like [`locate`](Self::locate), but starts from `*cursor` and stores the
    /// result there. Fast when successive queries move forward slowly.
    #[inline]
    pub fn locate_from(&self, cursor: &mut usize, t: f64) -> usize {
        let last_panel = self.times.len() - 2;
        let mut k = (*cursor).min(last_panel);
        while k < last_panel && self.times[k + 1] <= t {
            k += 1;
        }
        while k > 0 && self.times[k] > t {
            k -= 1;
        }
        *cursor = k;
        k
    }

    #[inline]
    fn basis(&self, k: usize, t: f64) -> (f64, [f64; 4]) {
        let t0 = self.times[k];
        let h = self.times[k + 1] - t0;
        let s = (t - t0) * self.inv_widths[k];
        let s2 = s * s;
        let s3 = s2 * s;
        (h, [2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2])
    }

    #[inline]
    fn hermite(&self, k: usize, h: f64, w: &[f64; 4], c: usize) -> f64 {
        let (a, b) = (&self.knots[k], &self.knots[k + 1]);
        w[0] * a[0][c] + w[1] * h * a[1][c] + w[2] * b[0][c] + w[3] * h * b[1][c]
    }

    /// Component `c` at time `t`. Returns the pre-history for `t <= 0`;
    /// callers must not ask beyond the last knot.
    #[inline]
    pub fn eval(&self, t: f64, c: usize) -> f64 {
        if t <= 0.0 {
            return self.prehistory[c];
        }
        debug_assert!(t <= self.times[self.times.len() - 1], "extrapolation requested at {t}");
        if self.times.len() == 1 {
            return self.knots[0][0][c];
        }
        let k = self.locate(t);
        let (h, w) = self.basis(k, t);
        self.hermite(k, h, &w, c)
    }

    /// Two components at the same time with a single lookup.
    #[inline]
    pub fn eval_pair(&self, t: f64, a: usize, b: usize) -> (f64, f64) {
        if t <= 0.0 {
            return (self.prehistory[a], self.prehistory[b]);
        }
        debug_assert!(t <= self.times[self.times.len() - 1], "extrapolation requested at {t}");
        if self.times.len() == 1 {
            return (self.knots[0][0][a], self.knots[0][0][b]);
        }
        let k = self.locate(t);
        let (h, w) = self.basis(k, t);
        (self.hermite(k, h, &w, a), self.hermite(k, h, &w, b))
    }

    /// [`eval`](Self::eval) with a panel cursor (see [`locate_from`](Self::locate_from)).
    #[inline]
    pub fn eval_from(&self, cursor: &mut usize, t: f64, c: usize) -> f64 {
        if t <= 0.0 || self.times.len() == 1 {
            return self.eval(t, c);
        }
        let k = self.locate_from(cursor, t);
        let (h, w) = self.basis(k, t);
        self.hermite(k, h, &w, c)
    }

    /// [`eval_pair`](Self::eval_pair) with a panel cursor.
    #[inline]
    pub fn eval_pair_from(&self, cursor: &mut usize, t: f64, a: usize, b: usize) -> (f64, f64) {
        if t <= 0.0 || self.times.len() == 1 {
            return self.eval_pair(t, a, b);
        }
        let k = self.locate_from(cursor, t);
        let (h, w) = self.basis(k, t);
        (self.hermite(k, h, &w, a), self.hermite(k, h, &w, b))
    }

    pub fn eval_all(&self, t: f64) -> [f64; D] {
        std::array::from_fn(|c| self.eval(t, c))
    }

    /// Checked variant of [`eval`](Self::eval): `None` beyond the last knot.
    pub fn try_eval(&self, t: f64, c: usize) -> Option<f64> {
        match self.last_time() {
            _ if t <= 0.0 => Some(self.prehistory[c]),
            Some(last) if t <= last => Some(self.eval(t, c)),
            _ => None,
        }
    }
}
