//! Formula evaluation: operands are materialized in the working coordinates
//! (the default coordinates of the formula's first tensor), combined by
//! contraction and derivative expansion, aligned term by term, and registered
//! as a new tensor object.

use super::{Formula, Operand, Term};
use crate::error::{Error, Result};
use crate::expr::{diff, Expr};
use crate::session::{IndexConfig, Role, Session, TensorObject, PLACEHOLDER_SYMBOL};
use crate::transform::{flat_index, for_each_multi};
use indexmap::IndexMap;

/// A working representation: dense components with the letters and index
/// positions of each slot, in the evaluation coordinates.
#[derive(Clone, Debug)]
struct Slab {
    comps: Vec<Expr>,
    letters: Vec<char>,
    config: IndexConfig,
}

struct Ctx {
    coords: String,
    dim: usize,
    symbols: Vec<String>,
    metric: Option<String>,
}

pub(crate) const DEFAULT_RESULT_ID: &str = "Result";

impl Session {
    /// Parse and evaluate a formula, registering the result. The target ID
    /// defaults to "Result" (always overwritten silently); explicit targets
    /// honor the overwrite policy.
    pub fn calc(&mut self, text: &str, symbol: Option<&str>) -> Result<String> {
        let formula = super::parse_formula(text)?;
        self.evaluate_formula(&formula, symbol)
    }

    pub fn evaluate_formula(&mut self, formula: &Formula, symbol: Option<&str>) -> Result<String> {
        let ctx = self.formula_context(formula)?;
        let mut slab = self.eval_sum(formula, &ctx)?;
        if let Some(target) = &formula.target {
            slab = self.permute_to(slab, &target.letters, &ctx)?;
        }
        let result_id = formula
            .target
            .as_ref()
            .map(|t| t.id.clone())
            .unwrap_or_else(|| DEFAULT_RESULT_ID.to_string());
        let metric_id = self.result_metric(&ctx)?;
        let comps = self.simplify_exprs(slab.comps);
        let mut components = IndexMap::new();
        components.insert((slab.config.clone(), ctx.coords.clone()), comps);
        let force = result_id == DEFAULT_RESULT_ID;
        if !force {
            self.check_id_free(&result_id)?;
        }
        self.insert_object(
            TensorObject {
                id: result_id.clone(),
                role: Role::Tensor,
                symbol: symbol.unwrap_or(PLACEHOLDER_SYMBOL).to_string(),
                metric_id: Some(metric_id),
                default_indices: slab.config,
                default_coords: ctx.coords,
                components,
                coord_data: None,
            },
            true,
        )?;
        Ok(result_id)
    }

    fn formula_context(&mut self, formula: &Formula) -> Result<Ctx> {
        let first = formula
            .first_tensor()
            .ok_or_else(|| Error::Syntax {
                pos: 0,
                msg: "formula has no tensor reference".into(),
            })?
            .to_string();
        let coords = self.get(&first)?.default_coords.clone();
        let mut ids = Vec::new();
        formula.all_tensor_ids(&mut ids);
        // one metric across the whole formula; coordinates are neutral
        let mut metric: Option<String> = None;
        let mut any_coordinates = false;
        for id in &ids {
            let obj = self.get(id)?;
            let effective = match obj.role {
                Role::Coordinates => {
                    any_coordinates = true;
                    None
                }
                Role::Metric => Some(obj.id.clone()),
                _ => obj.metric_id.clone(),
            };
            if let Some(m) = effective {
                match &metric {
                    Some(existing) if *existing != m => {
                        return Err(Error::MixedMetrics(existing.clone(), m));
                    }
                    None => metric = Some(m),
                    _ => {}
                }
            }
        }
        if any_coordinates {
            check_no_coordinate_addition(self, formula)?;
        }
        let dim = self.dimension(&coords)?;
        let symbols = self.coord_symbols(&coords)?;
        Ok(Ctx {
            coords,
            dim,
            symbols,
            metric,
        })
    }

    fn result_metric(&self, ctx: &Ctx) -> Result<String> {
        if let Some(m) = &ctx.metric {
            return Ok(m.clone());
        }
        // coordinates-only formulas: adopt a metric defined on the working
        // coordinates, or any metric as a last resort
        let mut fallback = None;
        for t in self.tensors.values() {
            if t.role == Role::Metric {
                if t.default_coords == ctx.coords {
                    return Ok(t.id.clone());
                }
                if fallback.is_none() {
                    fallback = Some(t.id.clone());
                }
            }
        }
        fallback.ok_or(Error::NoMetric)
    }

    fn eval_sum(&mut self, formula: &Formula, ctx: &Ctx) -> Result<Slab> {
        let mut acc: Option<Slab> = None;
        for term in &formula.terms {
            let slab = self.eval_term(term, ctx)?;
            acc = Some(match acc {
                None => slab,
                Some(first) => {
                    let aligned = self.align_to(slab, &first.letters, &first.config, ctx)?;
                    Slab {
                        comps: first
                            .comps
                            .iter()
                            .zip(&aligned.comps)
                            .map(|(a, b)| Expr::sum(vec![a.clone(), b.clone()]))
                            .collect(),
                        letters: first.letters,
                        config: first.config,
                    }
                }
            });
        }
        acc.ok_or_else(|| Error::Syntax {
            pos: 0,
            msg: "empty formula".into(),
        })
    }

    fn eval_term(&mut self, term: &Term, ctx: &Ctx) -> Result<Slab> {
        let mut pending: Vec<&Operand> = Vec::new();
        let mut chain: Vec<Slab> = Vec::new();
        for op in &term.operands {
            match op {
                Operand::PartialD { .. } | Operand::CovariantD { .. } => pending.push(op),
                Operand::Tensor { id, letters } => {
                    let obj = self.get(id)?;
                    if letters.len() != obj.rank() {
                        return Err(Error::RankMismatch {
                            expected: obj.rank(),
                            got: letters.len(),
                        });
                    }
                    let indices = obj.default_indices.clone();
                    let comps = self.represent(id, &indices, &ctx.coords)?;
                    let slab = Slab {
                        comps,
                        letters: letters.clone(),
                        config: indices,
                    };
                    self.finish_operand(slab, &mut pending, &mut chain, ctx)?;
                }
                Operand::Group(g) => {
                    let slab = self.eval_sum(g, ctx)?;
                    self.finish_operand(slab, &mut pending, &mut chain, ctx)?;
                }
            }
        }
        if !pending.is_empty() {
            return Err(Error::DanglingDerivative);
        }
        let mut acc = chain.remove(0);
        for next in chain {
            acc = self.contract_pair(acc, next, ctx)?;
        }
        // scalar coefficient
        if !acc.comps.is_empty() && !term.coeff.is_num_one() {
            for c in acc.comps.iter_mut() {
                *c = Expr::prod(vec![term.coeff.clone(), c.clone()]);
            }
        }
        Ok(acc)
    }

    fn finish_operand(
        &mut self,
        slab: Slab,
        pending: &mut Vec<&Operand>,
        chain: &mut Vec<Slab>,
        ctx: &Ctx,
    ) -> Result<()> {
        let mut slab = self.resolve_traces(slab, ctx)?;
        while let Some(op) = pending.pop() {
            slab = match op {
                Operand::PartialD { letter } => self.apply_derivative(*letter, slab, false, ctx)?,
                Operand::CovariantD { letter } => self.apply_derivative(*letter, slab, true, ctx)?,
                _ => unreachable!(),
            };
            slab = self.resolve_traces(slab, ctx)?;
        }
        chain.push(slab);
        Ok(())
    }

    /// Contract repeated letters within one operand (traces).
    fn resolve_traces(&mut self, mut slab: Slab, ctx: &Ctx) -> Result<Slab> {
        loop {
            let mut pair = None;
            'outer: for i in 0..slab.letters.len() {
                for j in (i + 1)..slab.letters.len() {
                    if slab.letters[i] == slab.letters[j] {
                        pair = Some((i, j));
                        break 'outer;
                    }
                }
            }
            let Some((i, j)) = pair else {
                return Ok(slab);
            };
            if slab.config[i] == slab.config[j] {
                slab = self.flip_slab_slot(slab, j, ctx)?;
            }
            slab = trace_slots(slab, i, j, ctx.dim);
        }
    }

    fn flip_slab_slot(&mut self, slab: Slab, slot: usize, ctx: &Ctx) -> Result<Slab> {
        let metric = ctx.metric.clone().ok_or(Error::NoMetric)?;
        let (comps, config) =
            self.flip_slot(slab.comps, &slab.config, slot, &metric, &ctx.coords)?;
        Ok(Slab {
            comps,
            letters: slab.letters,
            config,
        })
    }

    /// Expand a derivative operand into its gradient (free letter) or
    /// divergence (letter contracted with one of the operand's slots).
    fn apply_derivative(
        &mut self,
        letter: char,
        mut slab: Slab,
        covariant: bool,
        ctx: &Ctx,
    ) -> Result<Slab> {
        let divergence = slab.letters.iter().position(|c| *c == letter);
        if let Some(k) = divergence {
            // the matched slot must be upper before differentiation
            if slab.config[k] == -1 {
                slab = self.flip_slab_slot(slab, k, ctx)?;
            }
        }
        let rank = slab.config.len();
        let dim = ctx.dim;
        let mut grad = vec![Expr::int(0); slab.comps.len() * dim];
        for_each_multi(dim, rank + 1, |multi| {
            let mu = multi[0];
            let rest = &multi[1..];
            let c = &slab.comps[flat_index(rest, dim)];
            grad[flat_index(multi, dim)] = diff(c, &ctx.symbols[mu]);
        });
        if covariant {
            let metric = ctx.metric.clone().ok_or(Error::NoMetric)?;
            let gamma_id = self.calc_christoffel(&metric)?;
            let gamma = self.represent(&gamma_id, &vec![1, -1, -1], &ctx.coords)?;
            let g = |a: usize, b: usize, c: usize| &gamma[(a * dim + b) * dim + c];
            for_each_multi(dim, rank + 1, |multi| {
                let mu = multi[0];
                let rest = &multi[1..];
                let mut terms = Vec::new();
                for (slot, sign) in slab.config.iter().enumerate() {
                    for lam in 0..dim {
                        let mut src = rest.to_vec();
                        src[slot] = lam;
                        let c = &slab.comps[flat_index(&src, dim)];
                        if c.is_num_zero() {
                            continue;
                        }
                        let gfac = if *sign == 1 {
                            g(rest[slot], mu, lam)
                        } else {
                            g(lam, mu, rest[slot])
                        };
                        if gfac.is_num_zero() {
                            continue;
                        }
                        let term = Expr::prod(vec![gfac.clone(), c.clone()]);
                        terms.push(if *sign == 1 { term } else { Expr::neg(term) });
                    }
                }
                if !terms.is_empty() {
                    let at = flat_index(multi, dim);
                    terms.insert(0, grad[at].clone());
                    grad[at] = Expr::sum(terms);
                }
            });
        }
        let mut letters = vec![letter];
        letters.extend(slab.letters.iter().copied());
        let mut config = vec![-1];
        config.extend(slab.config.iter().copied());
        let out = Slab {
            comps: grad,
            letters,
            config,
        };
        match divergence {
            Some(k) => Ok(trace_slots(out, 0, k + 1, dim)),
            None => Ok(out),
        }
    }

    /// Contract all shared letters between two slabs; with no shared letters
    /// this is the outer product.
    fn contract_pair(&mut self, a: Slab, mut b: Slab, ctx: &Ctx) -> Result<Slab> {
        let mut shared: Vec<(usize, usize)> = Vec::new();
        for (i, la) in a.letters.iter().enumerate() {
            if let Some(j) = b.letters.iter().position(|lb| lb == la) {
                shared.push((i, j));
            }
        }
        // arrange each pair one-up-one-down by flipping the right operand
        for (i, j) in &shared {
            if a.config[*i] == b.config[*j] {
                b = self.flip_slab_slot(b, *j, ctx)?;
            }
        }
        let dim = ctx.dim;
        let a_free: Vec<usize> = (0..a.letters.len())
            .filter(|i| !shared.iter().any(|(ai, _)| ai == i))
            .collect();
        let b_free: Vec<usize> = (0..b.letters.len())
            .filter(|j| !shared.iter().any(|(_, bj)| bj == j))
            .collect();
        let out_rank = a_free.len() + b_free.len();
        let mut letters = Vec::with_capacity(out_rank);
        let mut config = Vec::with_capacity(out_rank);
        for &i in &a_free {
            letters.push(a.letters[i]);
            config.push(a.config[i]);
        }
        for &j in &b_free {
            letters.push(b.letters[j]);
            config.push(b.config[j]);
        }
        let mut comps = vec![Expr::int(0); dim.pow(out_rank as u32)];
        for_each_multi(dim, out_rank, |out_multi| {
            let mut terms = Vec::new();
            for_each_multi(dim, shared.len(), |shared_multi| {
                let mut ai = vec![0usize; a.letters.len()];
                for (t, &slot) in a_free.iter().enumerate() {
                    ai[slot] = out_multi[t];
                }
                let mut bi = vec![0usize; b.letters.len()];
                for (t, &slot) in b_free.iter().enumerate() {
                    bi[slot] = out_multi[a_free.len() + t];
                }
                for (t, (ia, jb)) in shared.iter().enumerate() {
                    ai[*ia] = shared_multi[t];
                    bi[*jb] = shared_multi[t];
                }
                let ca = &a.comps[flat_index(&ai, dim)];
                if ca.is_num_zero() {
                    return;
                }
                let cb = &b.comps[flat_index(&bi, dim)];
                if cb.is_num_zero() {
                    return;
                }
                terms.push(Expr::prod(vec![ca.clone(), cb.clone()]));
            });
            comps[flat_index(out_multi, dim)] = Expr::sum(terms);
        });
        Ok(Slab {
            comps,
            letters,
            config,
        })
    }

    /// Reorder a slab's slots to the reference letter order, then flip
    /// positions to the reference configuration.
    fn align_to(
        &mut self,
        slab: Slab,
        letters_ref: &[char],
        config_ref: &IndexConfig,
        ctx: &Ctx,
    ) -> Result<Slab> {
        let mut slab = self.permute_to(slab, letters_ref, ctx)?;
        for slot in 0..config_ref.len() {
            if slab.config[slot] != config_ref[slot] {
                slab = self.flip_slab_slot(slab, slot, ctx)?;
            }
        }
        Ok(slab)
    }

    fn permute_to(&mut self, slab: Slab, letters_ref: &[char], ctx: &Ctx) -> Result<Slab> {
        if slab.letters == letters_ref {
            return Ok(slab);
        }
        let perm: Vec<usize> = letters_ref
            .iter()
            .map(|c| {
                slab.letters
                    .iter()
                    .position(|l| l == c)
                    .ok_or_else(|| Error::FreeIndexMismatch(format!("letter '{c}' not present")))
            })
            .collect::<Result<Vec<_>>>()?;
        let dim = ctx.dim;
        let rank = slab.config.len();
        let mut comps = vec![Expr::int(0); slab.comps.len()];
        for_each_multi(dim, rank, |multi| {
            let mut src = vec![0usize; rank];
            for (t, &p) in perm.iter().enumerate() {
                src[p] = multi[t];
            }
            comps[flat_index(multi, dim)] = slab.comps[flat_index(&src, dim)].clone();
        });
        let config: IndexConfig = perm.iter().map(|&p| slab.config[p]).collect();
        Ok(Slab {
            comps,
            letters: letters_ref.to_vec(),
            config,
        })
    }
}

/// Sum over a one-up-one-down slot pair.
fn trace_slots(slab: Slab, i: usize, j: usize, dim: usize) -> Slab {
    debug_assert!(slab.config[i] != slab.config[j]);
    let rank = slab.config.len();
    let out_rank = rank - 2;
    let kept: Vec<usize> = (0..rank).filter(|s| *s != i && *s != j).collect();
    let mut comps = vec![Expr::int(0); dim.pow(out_rank as u32)];
    for_each_multi(dim, out_rank, |out_multi| {
        let mut terms = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut src = vec![0usize; rank];
            for (t, &slot) in kept.iter().enumerate() {
                src[slot] = out_multi[t];
            }
            src[i] = d;
            src[j] = d;
            let c = &slab.comps[flat_index(&src, dim)];
            if !c.is_num_zero() {
                terms.push(c.clone());
            }
        }
        comps[flat_index(out_multi, dim)] = Expr::sum(terms);
    });
    let letters = kept.iter().map(|&s| slab.letters[s]).collect();
    let config = kept.iter().map(|&s| slab.config[s]).collect();
    Slab {
        comps,
        letters,
        config,
    }
}

fn check_no_coordinate_addition(session: &Session, formula: &Formula) -> Result<()> {
    fn has_coordinates(session: &Session, f: &Formula) -> Result<bool> {
        let mut ids = Vec::new();
        f.all_tensor_ids(&mut ids);
        for id in ids {
            if session.get(&id)?.role == Role::Coordinates {
                return Ok(true);
            }
        }
        Ok(false)
    }
    if formula.terms.len() > 1 && has_coordinates(session, formula)? {
        return Err(Error::CoordinateAddition);
    }
    for term in &formula.terms {
        for op in &term.operands {
            if let Operand::Group(g) = op {
                check_no_coordinate_addition(session, g)?;
            }
        }
    }
    Ok(())
}
