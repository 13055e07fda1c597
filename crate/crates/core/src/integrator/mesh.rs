use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::{DelayTerm, ImpulseSchedule, ValidatedSpec};

/// Step control for the fixed-mesh integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// Largest allowed spacing between mesh nodes.
    pub base_step: f64,
    /// How many times discontinuities are pushed forward through the delays.
    pub propagation_depth: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self { base_step: 1e-3, propagation_depth: 3 }
    }
}

impl MeshOptions {
    pub fn with_step(base_step: f64) -> Self {
        Self { base_step, ..Self::default() }
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !(self.base_step > 0.0) || !self.base_step.is_finite() {
            return Err(Error::arg("base step must be positive"));
        }
        Ok(())
    }
}

/// Strictly increasing integration nodes that contain every impulse point and
/// every tracked discontinuity in range.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    impulse: Vec<Option<usize>>,
    base_step: f64,
}

impl Mesh {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn base_step(&self) -> f64 {
        self.base_step
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index into the impulse schedule if node `i` is an impulse point.
    pub fn impulse_at(&self, i: usize) -> Option<usize> {
        self.impulse[i]
    }

    pub fn contains(&self, t: f64) -> bool {
        self.nodes.binary_search_by(|n| n.total_cmp(&t)).is_ok()
    }
}

/// Mesh for solving `spec` on `[0, horizon]`.
pub fn build_mesh(
    spec: &ValidatedSpec,
    horizon: f64,
    base_step: f64,
    propagation_depth: usize,
) -> Result<Mesh> {
    let opts = MeshOptions { base_step, propagation_depth };
    MeshPlan::for_solve(spec, 0.0, horizon, true, true).build(&opts, &[])
}

/// Everything that determines a mesh: range, impulses, and the seeds whose
/// images under the deviations become breakpoints.
pub(crate) struct MeshPlan<'a> {
    terms: &'a [DelayTerm],
    start: f64,
    end: f64,
    impulses: Option<&'a ImpulseSchedule>,
    seeds: Vec<f64>,
}

impl<'a> MeshPlan<'a> {
    /// `with_inputs` adds forcing and history discontinuities to the seeds.
    pub(crate) fn for_solve(
        spec: &'a ValidatedSpec,
        start: f64,
        end: f64,
        with_impulses: bool,
        with_inputs: bool,
    ) -> Self {
        let mut seeds = Vec::new();
        seeds.push(start);
        for term in &spec.terms {
            seeds.extend_from_slice(term.coefficient.kinks());
            if let crate::model::DeviationDescriptor::Tabulated { abscissae, .. } = &term.delay {
                seeds.extend_from_slice(abscissae);
            }
        }
        if with_inputs {
            seeds.extend_from_slice(spec.forcing.kinks());
            seeds.extend(spec.history.kinks().iter().copied().filter(|&k| k < 0.0));
        }
        let impulses = with_impulses.then_some(&spec.impulses);
        if let Some(imp) = impulses {
            seeds.extend(imp.points.iter().copied().filter(|&p| p > start && p <= end));
        }
        Self { terms: &spec.terms, start, end, impulses, seeds }
    }

    pub(crate) fn build(&self, opts: &MeshOptions, extra: &[f64]) -> Result<Mesh> {
        opts.check()?;
        if !(self.end > self.start) {
            return Err(Error::arg("mesh end must exceed its start"));
        }
        let (start, end) = (self.start, self.end);
        let eps = math::merge_eps(end);
        let in_range = |t: f64| t > start && t < end;

        // (value, fixed): fixed points are kept exactly when merging
        let mut points: Vec<(f64, bool)> = Vec::new();
        points.push((start, true));
        points.push((end, true));
        if let Some(imp) = self.impulses {
            points.extend(
                imp.points.iter().copied().filter(|&p| p > start && p <= end).map(|p| (p, true)),
            );
        }
        points.extend(self.seeds.iter().copied().filter(|&t| in_range(t)).map(|t| (t, false)));
        points.extend(extra.iter().copied().filter(|&t| in_range(t)).map(|t| (t, false)));

        let mut frontier = self.seeds.clone();
        for _ in 0..opts.propagation_depth {
            let mut next = Vec::new();
            for &b in &frontier {
                for term in self.terms {
                    if let Some(xi) = term.delay.preimage(b) {
                        if xi > start && xi < end + eps {
                            next.push(xi);
                        }
                    }
                }
            }
            dedup_sorted(&mut next, eps);
            if next.is_empty() {
                break;
            }
            points.extend(next.iter().copied().filter(|&t| in_range(t)).map(|t| (t, false)));
            frontier = next;
        }

        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breaks: Vec<(f64, bool)> = Vec::with_capacity(points.len());
        for (t, fixed) in points {
            match breaks.last_mut() {
                Some(last) if t - last.0 <= eps => {
                    if fixed && !last.1 {
                        *last = (t, true);
                    }
                }
                _ => breaks.push((t, fixed)),
            }
        }
        // merging may have pulled an interior point onto the end
        while breaks.len() > 1 && breaks[breaks.len() - 1].0 > end {
            breaks.pop();
        }

        let mut nodes = Vec::new();
        for w in breaks.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            let n = math::ceil((b - a) / opts.base_step - 1e-9).max(1.0) as usize;
            for i in 0..n {
                nodes.push(if i == 0 { a } else { a + (b - a) * (i as f64) / (n as f64) });
            }
        }
        nodes.push(breaks[breaks.len() - 1].0);

        let impulse = match self.impulses {
            Some(imp) => nodes
                .iter()
                .map(|&t| if t > start { imp.index_of(t) } else { None })
                .collect(),
            None => alloc::vec![None; nodes.len()],
        };
        Ok(Mesh { nodes, impulse, base_step: opts.base_step })
    }
}

fn dedup_sorted(v: &mut Vec<f64>, eps: f64) {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|b, a| *b - *a <= eps);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use alloc::vec;

    fn has(mesh: &Mesh, t: f64) -> bool {
        mesh.nodes().iter().any(|n| (n - t).abs() < 1e-12)
    }

    #[test]
    fn breakpoints_coincide_with_impulses() {
        let spec = validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(1.0, 1.0 / 3.0))
                .with_impulses(ImpulseSchedule::homogeneous(
                    vec![1.0 / 3.0, 2.0 / 3.0],
                    vec![1.0 / 6.0, 1.0 / 6.0],
                )),
        )
        .unwrap();
        let mesh = build_mesh(&spec, 1.0, 0.05, 2).unwrap();
        for t in [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0] {
            assert!(has(&mesh, t), "missing {t}");
        }
        assert_eq!(mesh.impulse_at(mesh.nodes().iter().position(|&n| n == 1.0 / 3.0).unwrap()), Some(0));
        assert!(mesh.nodes().windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.05 + 1e-15));
    }

    #[test]
    fn uniform_without_delays() {
        let spec = validate(ProblemSpec::new(1.0)).unwrap();
        let mesh = build_mesh(&spec, 1.0, 0.25, 3).unwrap();
        assert_eq!(mesh.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn propagated_image_of_impulse() {
        let spec = validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(1.0, 0.4))
                .with_impulses(ImpulseSchedule::homogeneous(vec![0.5], vec![2.0])),
        )
        .unwrap();
        let mesh = build_mesh(&spec, 1.0, 0.3, 1).unwrap();
        assert!(has(&mesh, 0.9));
        assert!(has(&mesh, 0.4));
        // depth 1 stops before 0.8 = 0 + 2 * 0.4
        assert!(!has(&mesh, 0.8));
    }

    #[test]
    fn rejects_bad_step() {
        let spec = validate(ProblemSpec::new(1.0)).unwrap();
        assert!(build_mesh(&spec, 1.0, 0.0, 3).is_err());
        assert!(build_mesh(&spec, -1.0, 0.1, 3).is_err());
    }
}
