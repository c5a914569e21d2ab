//! Central-finite-difference verification of analytic gradients.

use rayon::prelude::*;

use crate::nn::graph::{Graph, Var};
use crate::nn::params::ParamStore;
use crate::nn::NnError;

/// Outcome of a gradient check over a parameter store.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: Option<String>,
    pub worst_index: usize,
    pub entries_checked: usize,
    /// Entries below the finite-difference resolution floor.
    pub entries_below_floor: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

/// Default resolution floor for small graphs with O(1) losses.
pub const DEFAULT_ABS_FLOOR: f64 = 1e-7;

/// Compares analytic gradients of a scalar-valued graph builder against
/// central finite differences over every parameter entry, using
/// [`DEFAULT_ABS_FLOOR`].
pub fn grad_check<F>(build: &F, store: &ParamStore<f64>, h: f64) -> Result<GradCheckReport, NnError>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var, NnError> + Sync,
{
    grad_check_with_floor(build, store, h, DEFAULT_ABS_FLOOR)
}

/// Gradient check with an explicit resolution floor: entries where both the
/// analytic and numeric magnitudes fall below `abs_floor` are counted but
/// not rated. Central differences of a loss L carry ~eps*|L|/(2h) absolute
/// noise, so gradients below |L|*eps/(2h*tolerance) are unmeasurable; for
/// an O(10) loss at h = 1e-5 that resolution limit is around 1e-5.
///
/// `build` must be deterministic: it is re-invoked once per perturbed
/// evaluation with the parameters inserted in store order.
pub fn grad_check_with_floor<F>(
    build: &F,
    store: &ParamStore<f64>,
    h: f64,
    abs_floor: f64,
) -> Result<GradCheckReport, NnError>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var, NnError> + Sync,
{
    // Analytic pass.
    let mut g = Graph::new();
    let vars = store.insert_into_graph(&mut g);
    let loss = build(&mut g, &vars)?;
    let grads = g.backward(loss)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .enumerate()
        .map(|(i, &v)| match grads.get(v) {
            Some(t) => t.data().to_vec(),
            None => vec![0.0; store.get(i).value.elems()],
        })
        .collect();

    let eval = |s: &ParamStore<f64>| -> Result<f64, NnError> {
        let mut g = Graph::new();
        let vars = s.insert_into_graph(&mut g);
        let loss = build(&mut g, &vars)?;
        Ok(g.scalar_value(loss))
    };

    let entries: Vec<(usize, usize)> = (0..store.len())
        .flat_map(|p| (0..store.get(p).value.elems()).map(move |e| (p, e)))
        .collect();

    // Central differences, parallel over chunks with a private store clone
    // per chunk. Results are collected in entry order, so the reduction is
    // deterministic.
    let chunk = entries.len().div_ceil(rayon::current_num_threads().max(1) * 4);
    let results: Result<Vec<Vec<(usize, usize, f64)>>, NnError> = entries
        .par_chunks(chunk.max(1))
        .map(|chunk_entries| {
            let mut local = store.clone();
            let mut out = Vec::with_capacity(chunk_entries.len());
            for &(p, e) in chunk_entries {
                let orig = local.get(p).value.data()[e];
                local.get_mut(p).value.data_mut()[e] = orig + h;
                let up = eval(&local)?;
                local.get_mut(p).value.data_mut()[e] = orig - h;
                let down = eval(&local)?;
                local.get_mut(p).value.data_mut()[e] = orig;
                out.push((p, e, (up - down) / (2.0 * h)));
            }
            Ok(out)
        })
        .collect();

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: None,
        worst_index: 0,
        entries_checked: 0,
        entries_below_floor: 0,
    };
    for (p, e, fd) in results?.into_iter().flatten() {
        let a = analytic[p][e];
        report.entries_checked += 1;
        if a.abs() < abs_floor && fd.abs() < abs_floor {
            report.entries_below_floor += 1;
            continue;
        }
        let rel = (a - fd).abs() / a.abs().max(fd.abs());
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst_param = Some(store.get(p).name.clone());
            report.worst_index = e;
        }
    }
    Ok(report)
}
