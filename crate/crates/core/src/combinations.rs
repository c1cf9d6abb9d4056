//! Fixed-size combinations in lexicographic order.

/// Iterator over all `k`-subsets of `0..n` as strictly increasing index
/// vectors, in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }

    fn step(&mut self) -> bool {
        let k = self.current.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        if !self.step() {
            self.done = true;
        }
        Some(out)
    }
}

/// `C(n, k)` as a float; saturates at `inf` instead of overflowing.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Visits every `k`-subset of `0..n` without allocating per item.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut it = Combinations::new(n, k);
    if it.done {
        return;
    }
    loop {
        f(&it.current);
        if !it.step() {
            break;
        }
    }
}
