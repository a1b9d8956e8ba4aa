/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(u32);

/// Reverse-mode tape. Every operation records its parents together with the
/// local partial derivatives, which are all computable at forward time; a
/// single reverse sweep then accumulates adjoints.
///
/// N-ary primitives (`sum`, `dot`, `affine`) record one node regardless of
/// arity, which keeps graphs like softmax-over-n and cumulative products
/// linear in `n` rather than quadratic.
#[derive(Debug, Default)]
pub struct Tape {
    vals: Vec<f64>,
    spans: Vec<(u32, u32)>,
    parents: Vec<u32>,
    partials: Vec<f64>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drop all nodes, keeping the allocations.
    pub fn clear(&mut self) {
        self.vals.clear();
        self.spans.clear();
        self.parents.clear();
        self.partials.clear();
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn val(&self, v: Var) -> f64 {
        self.vals[v.0 as usize]
    }

    /// A leaf node (input or constant).
    pub fn leaf(&mut self, value: f64) -> Var {
        let offset = self.parents.len() as u32;
        self.vals.push(value);
        self.spans.push((offset, 0));
        Var(self.vals.len() as u32 - 1)
    }

    fn push(&mut self, value: f64, ps: &[(Var, f64)]) -> Var {
        let offset = self.parents.len() as u32;
        for &(p, d) in ps {
            self.parents.push(p.0);
            self.partials.push(d);
        }
        self.vals.push(value);
        self.spans.push((offset, ps.len() as u32));
        Var(self.vals.len() as u32 - 1)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.val(a) + self.val(b);
        self.push(v, &[(a, 1.0), (b, 1.0)])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.val(a) - self.val(b);
        self.push(v, &[(a, 1.0), (b, -1.0)])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.val(a), self.val(b));
        self.push(va * vb, &[(a, vb), (b, va)])
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.val(a), self.val(b));
        self.push(va / vb, &[(a, 1.0 / vb), (b, -va / (vb * vb))])
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        let v = self.val(a) + c;
        self.push(v, &[(a, 1.0)])
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.val(a) * c;
        self.push(v, &[(a, c)])
    }

    pub fn square(&mut self, a: Var) -> Var {
        let va = self.val(a);
        self.push(va * va, &[(a, 2.0 * va)])
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.val(a).exp();
        self.push(v, &[(a, v)])
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let va = self.val(a);
        self.push(va.ln(), &[(a, 1.0 / va)])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.val(a).tanh();
        self.push(v, &[(a, 1.0 - v * v)])
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let x = self.val(a);
        let v = crate::nn::mlp::softplus(x);
        let sig = if x > 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        };
        self.push(v, &[(a, sig)])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let x = self.val(a);
        self.push(x.max(0.0), &[(a, if x > 0.0 { 1.0 } else { 0.0 })])
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let x = self.val(a);
        self.push(x.abs(), &[(a, x.signum())])
    }

    /// `sum_i vars[i]` as a single node.
    pub fn sum(&mut self, vars: &[Var]) -> Var {
        let offset = self.parents.len() as u32;
        let mut total = 0.0;
        for &p in vars {
            total += self.vals[p.0 as usize];
            self.parents.push(p.0);
            self.partials.push(1.0);
        }
        self.vals.push(total);
        self.spans.push((offset, vars.len() as u32));
        Var(self.vals.len() as u32 - 1)
    }

    /// `sum_i coefs[i] * vars[i] + bias` with constant coefficients.
    pub fn affine(&mut self, vars: &[Var], coefs: &[f64], bias: f64) -> Var {
        debug_assert_eq!(vars.len(), coefs.len());
        let offset = self.parents.len() as u32;
        let mut total = bias;
        for (&p, &c) in vars.iter().zip(coefs) {
            total += c * self.vals[p.0 as usize];
            self.parents.push(p.0);
            self.partials.push(c);
        }
        self.vals.push(total);
        self.spans.push((offset, vars.len() as u32));
        Var(self.vals.len() as u32 - 1)
    }

    /// `sum_i a[i] * b[i]` where both factors are nodes.
    pub fn dot(&mut self, a: &[Var], b: &[Var]) -> Var {
        debug_assert_eq!(a.len(), b.len());
        let offset = self.parents.len() as u32;
        let mut total = 0.0;
        for (&pa, &pb) in a.iter().zip(b) {
            let (va, vb) = (self.vals[pa.0 as usize], self.vals[pb.0 as usize]);
            total += va * vb;
            self.parents.push(pa.0);
            self.partials.push(vb);
            self.parents.push(pb.0);
            self.partials.push(va);
        }
        self.vals.push(total);
        self.spans.push((offset, 2 * a.len() as u32));
        Var(self.vals.len() as u32 - 1)
    }

    /// Numerically stable softmax over the given logits.
    pub fn softmax(&mut self, logits: &[Var]) -> Vec<Var> {
        let max = logits
            .iter()
            .map(|&l| self.val(l))
            .fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<Var> = logits
            .iter()
            .map(|&l| {
                let shifted = self.add_const(l, -max);
                self.exp(shifted)
            })
            .collect();
        let denom = self.sum(&exps);
        exps.iter().map(|&e| self.div(e, denom)).collect()
    }

    /// Adjoints of `out` with respect to every node.
    pub fn backward(&self, out: Var) -> Vec<f64> {
        let mut adj = vec![0.0; self.vals.len()];
        adj[out.0 as usize] = 1.0;
        for i in (0..self.vals.len()).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let (offset, len) = self.spans[i];
            let (o, l) = (offset as usize, len as usize);
            for k in o..o + l {
                adj[self.parents[k] as usize] += a * self.partials[k];
            }
        }
        adj
    }

    /// Gradient of `out` with respect to the listed leaves.
    pub fn gradient(&self, out: Var, wrt: &[Var]) -> Vec<f64> {
        let adj = self.backward(out);
        wrt.iter().map(|&v| adj[v.0 as usize]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_gradient() {
        // (w - 3)^2 at w = 5 has gradient 4.
        let mut t = Tape::new();
        let w = t.leaf(5.0);
        let shifted = t.add_const(w, -3.0);
        let loss = t.square(shifted);
        assert_eq!(t.val(loss), 4.0);
        assert_eq!(t.gradient(loss, &[w]), vec![4.0]);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let mut t = Tape::new();
        let w = t.leaf(2.0);
        let c = t.leaf(7.0);
        let loss = t.square(c);
        assert_eq!(t.gradient(loss, &[w]), vec![0.0]);
    }

    #[test]
    fn fused_ops_match_scalar_composition() {
        let mut t = Tape::new();
        let xs: Vec<Var> = [1.0, -2.0, 0.5].iter().map(|&v| t.leaf(v)).collect();
        let lin = t.affine(&xs, &[3.0, 0.25, -1.0], 0.5);
        assert_relative_eq!(t.val(lin), 3.0 - 0.5 - 0.5 + 0.5);
        let g = t.gradient(lin, &xs);
        assert_eq!(g, vec![3.0, 0.25, -1.0]);
    }

    #[test]
    fn softmax_partials_against_finite_differences() {
        let logits = [0.3, -1.2, 0.8];
        let eval = |l: &[f64]| {
            let mut t = Tape::new();
            let vars: Vec<Var> = l.iter().map(|&v| t.leaf(v)).collect();
            let sm = t.softmax(&vars);
            // Scalar probe: sum of squares of probabilities.
            let sq: Vec<Var> = sm.iter().map(|&p| t.square(p)).collect();
            let out = t.sum(&sq);
            (t.val(out), t.gradient(out, &vars))
        };
        let (_, grad) = eval(&logits);
        let h = 1e-6;
        for i in 0..3 {
            let mut up = logits;
            up[i] += h;
            let mut dn = logits;
            dn[i] -= h;
            let fd = (eval(&up).0 - eval(&dn).0) / (2.0 * h);
            assert_relative_eq!(grad[i], fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn div_ln_exp_chain() {
        // f(x) = ln(exp(x) / (1 + exp(x))) = x - softplus(x); f'(x) = 1 - sigmoid(x)
        let x0 = 0.7;
        let mut t = Tape::new();
        let x = t.leaf(x0);
        let e = t.exp(x);
        let denom = t.add_const(e, 1.0);
        let frac = t.div(e, denom);
        let out = t.ln(frac);
        let g = t.gradient(out, &[x])[0];
        let sig = 1.0 / (1.0 + (-x0).exp());
        assert_relative_eq!(g, 1.0 - sig, epsilon = 1e-12);
    }
}
