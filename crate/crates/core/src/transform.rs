//! The representation engine: materializes any (index configuration,
//! coordinate system) representation from cached ones via metric contraction
//! and Jacobian transformation, with the non-tensorial extra term for
//! Christoffel-role objects. Results are cached on the objects.

use crate::error::{Error, Result};
use crate::expr::{diff, simplify, substitute_raw, Assumptions, Expr, SubRule};
use crate::session::{IndexConfig, JacobianSet, Role, Session};

/// Row-major flat index for a multi-index.
pub(crate) fn flat_index(multi: &[usize], dim: usize) -> usize {
    multi.iter().fold(0, |acc, &i| acc * dim + i)
}

/// Visit every multi-index of the given rank in row-major order.
pub(crate) fn for_each_multi(dim: usize, rank: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; rank];
    loop {
        f(&idx);
        let mut k = rank;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < dim {
                break;
            }
            idx[k] = 0;
        }
        if rank == 0 {
            return;
        }
    }
}

/// Determinant by Laplace expansion; the result is unsimplified.
pub fn determinant(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    if n == 0 {
        return Expr::int(1);
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut terms = Vec::with_capacity(n);
    for j in 0..n {
        if m[0][j].is_num_zero() {
            continue;
        }
        let minor: Vec<Vec<Expr>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let sign = if j % 2 == 0 { 1 } else { -1 };
        terms.push(Expr::prod(vec![
            Expr::int(sign),
            m[0][j].clone(),
            determinant(&minor),
        ]));
    }
    Expr::sum(terms)
}

/// Symbolic matrix inverse by Gauss-Jordan elimination with probabilistic
/// zero tests for pivoting; every entry of the result is simplified.
pub fn invert_metric(m: &[Vec<Expr>], asm: &Assumptions) -> Result<Vec<Vec<Expr>>> {
    invert_with(m, &mut |exprs| {
        exprs.iter().map(|e| simplify(e, asm)).collect()
    }, asm)
}

fn invert_with(
    m: &[Vec<Expr>],
    simplify_batch: &mut dyn FnMut(Vec<Expr>) -> Vec<Expr>,
    asm: &Assumptions,
) -> Result<Vec<Vec<Expr>>> {
    let n = m.len();
    let mut a: Vec<Vec<Expr>> = m.to_vec();
    let mut inv: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Expr::int(1) } else { Expr::int(0) })
                .collect()
        })
        .collect();
    for col in 0..n {
        // pivot search; entries are canonical after each elimination round,
        // so structural and sampled zero tests suffice
        let mut pivot = None;
        for row in col..n {
            if a[row][col].is_num_zero() {
                continue;
            }
            if !crate::expr::is_zero_sampled(&a[row][col], asm)? {
                pivot = Some(row);
                break;
            }
        }
        let p = pivot.ok_or(Error::Singular)?;
        a.swap(col, p);
        inv.swap(col, p);
        // scale the pivot row
        let scale = Expr::pow(a[col][col].clone(), Expr::int(-1));
        let mut row_batch: Vec<Expr> = Vec::with_capacity(2 * n);
        for j in 0..n {
            row_batch.push(Expr::prod(vec![a[col][j].clone(), scale.clone()]));
        }
        for j in 0..n {
            row_batch.push(Expr::prod(vec![inv[col][j].clone(), scale.clone()]));
        }
        let mut row_batch = simplify_batch(row_batch);
        inv[col] = row_batch.split_off(n);
        a[col] = row_batch;
        // eliminate the other rows
        let mut batch: Vec<Expr> = Vec::new();
        let mut positions: Vec<(usize, usize, bool)> = Vec::new();
        for row in 0..n {
            if row == col || a[row][col].is_num_zero() {
                continue;
            }
            let factor = a[row][col].clone();
            for j in 0..n {
                batch.push(Expr::sub(
                    a[row][j].clone(),
                    Expr::prod(vec![factor.clone(), a[col][j].clone()]),
                ));
                positions.push((row, j, false));
                batch.push(Expr::sub(
                    inv[row][j].clone(),
                    Expr::prod(vec![factor.clone(), inv[col][j].clone()]),
                ));
                positions.push((row, j, true));
            }
        }
        let results = simplify_batch(batch);
        for ((row, j, is_inv), value) in positions.into_iter().zip(results) {
            if is_inv {
                inv[row][j] = value;
            } else {
                a[row][j] = value;
            }
        }
    }
    Ok(inv)
}

impl Session {
    /// Store a coordinate transformation edge and eagerly compute its
    /// Jacobian set. Rules map source symbols to expressions in the target
    /// symbols; unmentioned symbols map to themselves.
    pub fn add_coord_transformation(
        &mut self,
        source: &str,
        target: &str,
        rules: Vec<(String, Expr)>,
    ) -> Result<()> {
        let src_syms = self.coord_symbols(source)?;
        let tgt_syms = self.coord_symbols(target)?;
        if src_syms.len() != tgt_syms.len() {
            return Err(Error::DimensionMismatch(
                source.to_string(),
                target.to_string(),
            ));
        }
        for (name, _) in &rules {
            if !src_syms.contains(name) {
                return Err(Error::RuleTargetsNonSourceSymbol(name.clone()));
            }
        }
        let asm = self.options.assumptions.clone();
        let n = src_syms.len();
        // old coordinates as functions of the new
        let old_of_new: Vec<Expr> = src_syms
            .iter()
            .map(|s| {
                rules
                    .iter()
                    .find(|(name, _)| name == s)
                    .map(|(_, e)| e.clone())
                    .unwrap_or_else(|| Expr::sym(s))
            })
            .collect();
        let mut j = vec![vec![Expr::int(0); n]; n];
        for (i, old) in old_of_new.iter().enumerate() {
            for (jj, new_sym) in tgt_syms.iter().enumerate() {
                j[i][jj] = simplify(&diff(old, new_sym), &asm);
            }
        }
        let jinv = {
            let mut batch = |exprs: Vec<Expr>| self.simplify_exprs(exprs);
            invert_with(&j, &mut batch, &asm)?
        };
        let mut d2 = vec![vec![vec![Expr::int(0); n]; n]; n];
        for lam in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    d2[lam][mu][nu] = simplify(&diff(&j[lam][mu], &tgt_syms[nu]), &asm);
                }
            }
        }
        let sub_rules: Vec<SubRule> = rules
            .into_iter()
            .map(|(name, e)| SubRule::symbol(name, e))
            .collect();
        let cd = self
            .get_mut(source)?
            .coord_data
            .as_mut()
            .ok_or_else(|| Error::UnknownCoords(source.to_string()))?;
        cd.transformations.insert(target.to_string(), sub_rules);
        cd.jacobians
            .insert(target.to_string(), JacobianSet { j, jinv, d2 });
        Ok(())
    }

    fn edge(&self, source: &str, target: &str) -> Option<(&[SubRule], &JacobianSet)> {
        let cd = self.get(source).ok()?.coord_data.as_ref()?;
        let rules = cd.transformations.get(target)?;
        let jac = cd.jacobians.get(target)?;
        Some((rules, jac))
    }

    /// Materialize the representation of `id` for the given index
    /// configuration and coordinate system, transforming and raising or
    /// lowering from cached representations as needed. Results are cached.
    pub fn represent(&mut self, id: &str, indices: &IndexConfig, coords: &str) -> Result<Vec<Expr>> {
        let obj = self.get(id)?;
        if indices.len() != obj.rank() {
            return Err(Error::RankMismatch {
                expected: obj.rank(),
                got: indices.len(),
            });
        }
        let key = (indices.clone(), coords.to_string());
        if let Some(c) = obj.components.get(&key) {
            return Ok(c.clone());
        }
        self.dimension(coords)?;

        match obj.role {
            Role::Coordinates => {
                // coordinates do not transform like tensors; the native
                // representation is cached at creation, so reaching this
                // point means either a foreign request or a broken import
                if indices != &vec![1] || coords != id {
                    return Err(Error::RoleForbidden("Coordinates".to_string()));
                }
                Err(Error::Schema(format!(
                    "coordinate system \"{id}\" lacks its native components"
                )))
            }
            Role::Metric => self.represent_metric(id, indices, coords),
            Role::Christoffel => self.represent_christoffel(id, indices, coords),
            _ => self.represent_tensor(id, indices, coords),
        }
    }

    fn represent_metric(
        &mut self,
        id: &str,
        indices: &IndexConfig,
        coords: &str,
    ) -> Result<Vec<Expr>> {
        let dim = self.dimension(coords)?;
        let key = (indices.clone(), coords.to_string());
        let comps = match indices.as_slice() {
            [-1, -1] => {
                let (src_key, src) = self.pick_source(id, coords)?;
                let raw = self.transform_rep(&src, &src_key.0, &src_key.1, coords, false)?;
                self.simplify_exprs(raw)
            }
            [1, 1] => {
                // the inverse comes out of the elimination already simplified
                let lower = self.represent(id, &vec![-1, -1], coords)?;
                let matrix: Vec<Vec<Expr>> = (0..dim)
                    .map(|i| lower[i * dim..(i + 1) * dim].to_vec())
                    .collect();
                let asm = self.options.assumptions.clone();
                let inv = {
                    let mut batch = |exprs: Vec<Expr>| self.simplify_exprs(exprs);
                    invert_with(&matrix, &mut batch, &asm)?
                };
                inv.into_iter().flatten().collect()
            }
            // mixed configuration is the identity
            [_, _] => {
                let mut delta = vec![Expr::int(0); dim * dim];
                for i in 0..dim {
                    delta[i * dim + i] = Expr::int(1);
                }
                delta
            }
            _ => unreachable!("metrics have rank 2"),
        };
        self.get_mut(id)?.components.insert(key, comps.clone());
        Ok(comps)
    }

    fn represent_tensor(
        &mut self,
        id: &str,
        indices: &IndexConfig,
        coords: &str,
    ) -> Result<Vec<Expr>> {
        // a representation already in the requested coordinates, if any
        let in_coords: Option<IndexConfig> = {
            let obj = self.get(id)?;
            if obj.components.contains_key(&(obj.default_indices.clone(), coords.to_string())) {
                Some(obj.default_indices.clone())
            } else {
                obj.components
                    .keys()
                    .find(|(_, c)| c == coords)
                    .map(|(i, _)| i.clone())
            }
        };
        let (mut comps, mut config) = match in_coords {
            Some(config) => (
                self.get(id)?.components[&(config.clone(), coords.to_string())].clone(),
                config,
            ),
            None => {
                let (src_key, src) = self.pick_source(id, coords)?;
                let comps = self.transform_rep(&src, &src_key.0, &src_key.1, coords, false)?;
                (comps, src_key.0)
            }
        };
        // adjust index positions slot by slot
        let metric_id = self.get(id)?.metric_id.clone();
        for slot in 0..indices.len() {
            if config[slot] != indices[slot] {
                let metric = metric_id
                    .clone()
                    .ok_or(Error::RoleForbidden("Coordinates".to_string()))?;
                (comps, config) = self.flip_slot(comps, &config, slot, &metric, coords)?;
            }
        }
        let comps = self.simplify_exprs(comps);
        self.get_mut(id)?
            .components
            .insert((indices.clone(), coords.to_string()), comps.clone());
        Ok(comps)
    }

    fn represent_christoffel(
        &mut self,
        id: &str,
        indices: &IndexConfig,
        coords: &str,
    ) -> Result<Vec<Expr>> {
        let canonical: IndexConfig = vec![1, -1, -1];
        let have_in_coords = {
            let obj = self.get(id)?;
            obj.components.keys().any(|(_, c)| c == coords)
        };
        if !have_in_coords {
            // the anomalous transformation applies to the {+1,-1,-1} form
            let src_coords = self.pick_source_coords(id, coords)?;
            let base = self.represent(id, &canonical, &src_coords)?;
            let transformed =
                self.transform_rep(&base, &canonical, &src_coords, coords, true)?;
            let transformed = self.simplify_exprs(transformed);
            self.get_mut(id)?
                .components
                .insert((canonical.clone(), coords.to_string()), transformed);
        }
        self.represent_tensor(id, indices, coords)
    }

    /// Cached representation to transform from: the default-coordinates
    /// representation if it can reach the target, else the first cached one
    /// (in insertion order) with a direct edge.
    fn pick_source(&self, id: &str, coords: &str) -> Result<((IndexConfig, String), Vec<Expr>)> {
        let obj = self.get(id)?;
        let default_key = (obj.default_indices.clone(), obj.default_coords.clone());
        let mut candidates: Vec<(IndexConfig, String)> = Vec::new();
        if obj.components.contains_key(&default_key) {
            candidates.push(default_key);
        }
        for k in obj.components.keys() {
            if !candidates.contains(k) {
                candidates.push(k.clone());
            }
        }
        for key in candidates {
            if self.edge(&key.1, coords).is_some() {
                let comps = self.get(id)?.components[&key].clone();
                return Ok((key, comps));
            }
        }
        Err(Error::NoTransformPath {
            id: id.to_string(),
            coords: coords.to_string(),
        })
    }

    fn pick_source_coords(&self, id: &str, coords: &str) -> Result<String> {
        let obj = self.get(id)?;
        let mut candidates: Vec<String> = vec![obj.default_coords.clone()];
        for (_, c) in obj.components.keys() {
            if !candidates.contains(c) {
                candidates.push(c.clone());
            }
        }
        candidates
            .into_iter()
            .find(|c| self.edge(c, coords).is_some())
            .ok_or_else(|| Error::NoTransformPath {
                id: id.to_string(),
                coords: coords.to_string(),
            })
    }

    /// Coordinate-transform a representation (component arrays stay in the
    /// same index configuration): one inverse-Jacobian factor per upper slot,
    /// one Jacobian factor per lower slot, plus the inhomogeneous
    /// second-derivative term for connection coefficients.
    fn transform_rep(
        &mut self,
        comps: &[Expr],
        config: &IndexConfig,
        source: &str,
        target: &str,
        christoffel: bool,
    ) -> Result<Vec<Expr>> {
        let dim = self.dimension(target)?;
        let rank = config.len();
        let (rules, jac) = self
            .edge(source, target)
            .map(|(r, j)| (r.to_vec(), j.clone()))
            .ok_or_else(|| Error::NoTransformPath {
                id: source.to_string(),
                coords: target.to_string(),
            })?;
        // rewrite components in the target coordinates
        let mut current: Vec<Expr> = comps.iter().map(|e| substitute_raw(e, &rules)).collect();
        // contract one slot at a time with the appropriate Jacobian factor
        for slot in 0..rank {
            let mut next = vec![Expr::int(0); current.len()];
            for_each_multi(dim, rank, |multi| {
                let mut terms = Vec::with_capacity(dim);
                for old in 0..dim {
                    let mut src_multi = multi.to_vec();
                    src_multi[slot] = old;
                    let c = &current[flat_index(&src_multi, dim)];
                    if c.is_num_zero() {
                        continue;
                    }
                    let new = multi[slot];
                    let factor = if config[slot] == 1 {
                        jac.jinv[new][old].clone()
                    } else {
                        jac.j[old][new].clone()
                    };
                    if factor.is_num_zero() {
                        continue;
                    }
                    terms.push(Expr::prod(vec![factor, c.clone()]));
                }
                next[flat_index(multi, dim)] = Expr::sum(terms);
            });
            current = next;
        }
        if christoffel {
            // Γ^{λ'}_{μ'ν'} gains (∂x^{λ'}/∂x^λ)(∂²x^λ/∂x^{μ'}∂x^{ν'})
            for_each_multi(dim, 3, |multi| {
                let (lp, mp, np) = (multi[0], multi[1], multi[2]);
                let mut terms = Vec::with_capacity(dim);
                for lam in 0..dim {
                    let jinv = &jac.jinv[lp][lam];
                    let dd = &jac.d2[lam][mp][np];
                    if jinv.is_num_zero() || dd.is_num_zero() {
                        continue;
                    }
                    terms.push(Expr::prod(vec![jinv.clone(), dd.clone()]));
                }
                let at = flat_index(multi, dim);
                current[at] = Expr::sum(vec![current[at].clone(), Expr::sum(terms)]);
            });
        }
        Ok(current)
    }

    /// Raise or lower one slot of a raw representation by contracting with
    /// the metric (or its inverse) in the given coordinates.
    pub(crate) fn flip_slot(
        &mut self,
        comps: Vec<Expr>,
        config: &IndexConfig,
        slot: usize,
        metric_id: &str,
        coords: &str,
    ) -> Result<(Vec<Expr>, IndexConfig)> {
        let dim = self.dimension(coords)?;
        let rank = config.len();
        let want_upper = config[slot] == -1;
        let g = if want_upper {
            self.represent(metric_id, &vec![1, 1], coords)?
        } else {
            self.represent(metric_id, &vec![-1, -1], coords)?
        };
        let mut out = vec![Expr::int(0); comps.len()];
        for_each_multi(dim, rank, |multi| {
            let mut terms = Vec::with_capacity(dim);
            for s in 0..dim {
                let mut src = multi.to_vec();
                src[slot] = s;
                let c = &comps[flat_index(&src, dim)];
                if c.is_num_zero() {
                    continue;
                }
                let gfac = &g[multi[slot] * dim + s];
                if gfac.is_num_zero() {
                    continue;
                }
                terms.push(Expr::prod(vec![gfac.clone(), c.clone()]));
            }
            out[flat_index(multi, dim)] = Expr::sum(terms);
        });
        let mut new_config = config.clone();
        new_config[slot] = -config[slot];
        Ok((out, new_config))
    }

    /// Extract a plain copy of a representation; when `indices` or `coords`
    /// are omitted the defaults are used and `defaults_used` notes it.
    pub fn get_components(
        &mut self,
        id: &str,
        indices: Option<&IndexConfig>,
        coords: Option<&str>,
    ) -> Result<ComponentsOut> {
        let obj = self.get(id)?;
        let defaults_used = indices.is_none() || coords.is_none();
        let indices = indices.cloned().unwrap_or_else(|| obj.default_indices.clone());
        let coords = coords
            .map(|s| s.to_string())
            .unwrap_or_else(|| obj.default_coords.clone());
        let components = self.represent(id, &indices, &coords)?;
        Ok(ComponentsOut {
            components,
            indices,
            coords,
            defaults_used,
        })
    }
}

/// Result of `get_components`: the array plus the representation actually
/// used.
pub struct ComponentsOut {
    pub components: Vec<Expr>,
    pub indices: IndexConfig,
    pub coords: String,
    pub defaults_used: bool,
}
