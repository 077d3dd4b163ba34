use super::OdeError;

/// A strictly increasing set of nodes on `[0, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn new(nodes: Vec<f64>) -> Result<Self, OdeError> {
        if nodes.len() < 2 {
            return Err(OdeError::InvalidMesh("a mesh needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(OdeError::InvalidMesh(format!(
                "first node must be 0, got {}",
                nodes[0]
            )));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(OdeError::InvalidMesh(format!(
                "nodes must be finite and strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Mesh { nodes })
    }

    /// `n_nodes` equally spaced nodes on `[0, r_max]`.
    pub fn uniform(r_max: f64, n_nodes: usize) -> Result<Self, OdeError> {
        if !(r_max > 0.0) || n_nodes < 2 {
            return Err(OdeError::InvalidMesh(format!(
                "uniform mesh needs r_max > 0 and at least two nodes (got {r_max}, {n_nodes})"
            )));
        }
        let h = r_max / (n_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_nodes).map(|i| i as f64 * h).collect();
        nodes[n_nodes - 1] = r_max;
        Mesh::new(nodes)
    }

    /// `n_nodes` nodes `r_max (i / (n - 1))^2`, concentrated near the origin
    /// where localized profiles vary fastest.
    pub fn stretched(r_max: f64, n_nodes: usize) -> Result<Self, OdeError> {
        let u = Mesh::uniform(1.0, n_nodes)?;
        let mut nodes: Vec<f64> = u.nodes.iter().map(|t| r_max * t * t).collect();
        nodes[n_nodes - 1] = r_max;
        Mesh::new(nodes)
    }

    /// Nodes clustered toward the origin: spacing grows geometrically from
    /// `h0` until it reaches `h_max`, then stays uniform.
    pub fn graded(r_max: f64, h0: f64, growth: f64, h_max: f64) -> Result<Self, OdeError> {
        if !(r_max > 0.0 && h0 > 0.0 && growth >= 1.0 && h_max >= h0) {
            return Err(OdeError::InvalidMesh("invalid graded mesh parameters".into()));
        }
        let mut nodes = vec![0.0];
        let mut h = h0;
        let mut r = 0.0;
        while r + h < r_max - 0.25 * h {
            r += h;
            nodes.push(r);
            h = (h * growth).min(h_max);
        }
        nodes.push(r_max);
        Mesh::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("mesh is never empty")
    }

    /// Index `i` of the interval `[nodes[i], nodes[i+1]]` containing `r`,
    /// clamped to the first/last interval outside the span.
    pub fn locate(&self, r: f64) -> usize {
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|&x| x <= r);
        i.saturating_sub(1).min(n - 2)
    }

    /// Splits every interval in two.
    pub fn bisected(&self) -> Mesh {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.r_max());
        Mesh { nodes }
    }

    /// Truncates the mesh to `[0, r_end]`, adding `r_end` as a node.
    pub fn truncated(&self, r_end: f64) -> Result<Mesh, OdeError> {
        let mut nodes: Vec<f64> = self.nodes.iter().copied().filter(|&r| r < r_end).collect();
        if let Some(&last) = nodes.last() {
            if r_end - last < 1e-12 * r_end.max(1.0) {
                nodes.pop();
            }
        }
        nodes.push(r_end);
        Mesh::new(nodes)
    }

    /// Sorted union of two meshes' nodes, merging nodes closer than a relative 1e-13.
    pub fn union(&self, other: &Mesh) -> Vec<f64> {
        merge_breakpoints(&self.nodes, &other.nodes)
    }
}

pub(crate) fn merge_breakpoints(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        match out.last() {
            Some(&last) if next - last <= 1e-13 * next.abs().max(1.0) => {}
            _ => out.push(next),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_nodes() {
        assert!(Mesh::new(vec![0.0]).is_err());
        assert!(Mesh::new(vec![0.1, 1.0]).is_err());
        assert!(Mesh::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Mesh::new(vec![0.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn locate_clamps() {
        let m = Mesh::uniform(10.0, 11).unwrap();
        assert_eq!(m.locate(-1.0), 0);
        assert_eq!(m.locate(0.0), 0);
        assert_eq!(m.locate(3.5), 3);
        assert_eq!(m.locate(3.0), 3);
        assert_eq!(m.locate(10.0), 9);
        assert_eq!(m.locate(12.0), 9);
    }

    #[test]
    fn graded_and_bisected() {
        let m = Mesh::graded(100.0, 0.01, 1.1, 0.5).unwrap();
        assert_eq!(m.r_max(), 100.0);
        assert!(m.nodes()[1] - m.nodes()[0] < 0.011);
        let b = m.bisected();
        assert_eq!(b.len(), 2 * m.len() - 1);
    }

    #[test]
    fn union_dedupes() {
        let a = Mesh::uniform(1.0, 3).unwrap();
        let b = Mesh::uniform(1.0, 5).unwrap();
        assert_eq!(a.union(&b), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
