//! Curve Lagrangians and geodesic equations. Coordinates are promoted to
//! functions of the session's curve parameter; the Euler-Lagrange form keeps
//! its total parameter derivatives deferred until explicitly activated.

use crate::error::{Error, Result};
use crate::expr::{activate, diff_atom, substitute_raw, Expr, SubRule};
use crate::session::{RepKey, Role, Session};
use crate::transform::{flat_index, for_each_multi};

impl Session {
    /// Promotion rules mapping each coordinate symbol to a function of the
    /// curve parameter.
    fn promotion_rules(&self, coords: &str) -> Result<Vec<SubRule>> {
        let param = self.options.curve_parameter.clone();
        Ok(self
            .coord_symbols(coords)?
            .into_iter()
            .map(|c| {
                let promoted = Expr::func(c.clone(), vec![Expr::sym(&param)]);
                SubRule::symbol(c, promoted)
            })
            .collect())
    }

    fn coord_dot(&self, name: &str, order: u32) -> Expr {
        Expr::Deriv {
            head: name.to_string(),
            args: vec![Expr::sym(&self.options.curve_parameter)],
            orders: vec![order],
        }
    }

    /// The curve Lagrangian L = g_{μν}(x(λ)) ẋ^μ ẋ^ν as a scalar object
    /// `<metricId>Lagrangian`.
    pub fn calc_lagrangian(&mut self, metric_id: &str, coords: Option<&str>) -> Result<String> {
        let metric = self.get(metric_id)?;
        if metric.role != Role::Metric {
            return Err(Error::UnknownMetric(metric_id.to_string()));
        }
        let coords = coords
            .map(|c| c.to_string())
            .unwrap_or_else(|| metric.default_coords.clone());
        let id = format!("{metric_id}Lagrangian");
        if let Ok(existing) = self.get(&id) {
            if existing.default_coords == coords {
                return Ok(id);
            }
        }
        let dim = self.dimension(&coords)?;
        let symbols = self.coord_symbols(&coords)?;
        let g = self.represent(metric_id, &vec![-1, -1], &coords)?;
        let rules = self.promotion_rules(&coords)?;
        let mut terms = Vec::new();
        for mu in 0..dim {
            for nu in 0..dim {
                let entry = &g[mu * dim + nu];
                if entry.is_num_zero() {
                    continue;
                }
                terms.push(Expr::prod(vec![
                    substitute_raw(entry, &rules),
                    self.coord_dot(&symbols[mu], 1),
                    self.coord_dot(&symbols[nu], 1),
                ]));
            }
        }
        let lagrangian = self.simplify_exprs(vec![Expr::sum(terms)]);
        self.register_derived(&id, Role::Lagrangian, "L", metric_id, &coords, vec![], lagrangian)
    }

    /// Euler-Lagrange left-hand sides, one component per coordinate:
    /// ∂L/∂x^μ - d/dλ(∂L/∂ẋ^μ), with the total λ-derivative deferred.
    pub fn calc_geodesic_from_lagrangian(
        &mut self,
        metric_id: &str,
        coords: Option<&str>,
    ) -> Result<String> {
        let metric = self.get(metric_id)?;
        if metric.role != Role::Metric {
            return Err(Error::UnknownMetric(metric_id.to_string()));
        }
        let coords = coords
            .map(|c| c.to_string())
            .unwrap_or_else(|| metric.default_coords.clone());
        let id = format!("{metric_id}GeodesicFromLagrangian");
        if let Ok(existing) = self.get(&id) {
            if existing.default_coords == coords {
                return Ok(id);
            }
        }
        let lagrangian_id = self.calc_lagrangian(metric_id, Some(&coords))?;
        let l = self.represent(&lagrangian_id, &vec![], &coords)?[0].clone();
        let param = self.options.curve_parameter.clone();
        let symbols = self.coord_symbols(&coords)?;
        let asm = self.options.assumptions.clone();
        let mut comps = Vec::with_capacity(symbols.len());
        for name in &symbols {
            let position = Expr::func(name.clone(), vec![Expr::sym(&param)]);
            let velocity = self.coord_dot(name, 1);
            // both terms are normalized by 1/2, cancelling the factor of two
            // that the quadratic form produces for a symmetric metric
            let dl_dx = Expr::prod(vec![Expr::rat(1, 2), diff_atom(&l, &position)]);
            let dl_dv = crate::expr::simplify(
                &Expr::prod(vec![Expr::rat(1, 2), diff_atom(&l, &velocity)]),
                &asm,
            );
            let deferred = Expr::Deferred {
                inner: Box::new(dl_dv),
                param: param.clone(),
                order: 1,
            };
            comps.push(Expr::sum(vec![dl_dx, Expr::neg(deferred)]));
        }
        let comps = self.simplify_exprs(comps);
        self.register_derived(
            &id,
            Role::GeodesicFromLagrangian,
            "0",
            metric_id,
            &coords,
            vec![1],
            comps,
        )
    }

    /// Geodesic equations in the Christoffel form:
    /// component σ is ẍ^σ + Γ^σ_{μν}(x(λ)) ẋ^μ ẋ^ν, fully evaluated.
    pub fn calc_geodesic_from_christoffel(
        &mut self,
        metric_id: &str,
        coords: Option<&str>,
    ) -> Result<String> {
        let metric = self.get(metric_id)?;
        if metric.role != Role::Metric {
            return Err(Error::UnknownMetric(metric_id.to_string()));
        }
        let coords = coords
            .map(|c| c.to_string())
            .unwrap_or_else(|| metric.default_coords.clone());
        let id = format!("{metric_id}GeodesicFromChristoffel");
        if let Ok(existing) = self.get(&id) {
            if existing.default_coords == coords {
                return Ok(id);
            }
        }
        let gamma_id = self.calc_christoffel(metric_id)?;
        let dim = self.dimension(&coords)?;
        let gamma = self.represent(&gamma_id, &vec![1, -1, -1], &coords)?;
        let rules = self.promotion_rules(&coords)?;
        let symbols = self.coord_symbols(&coords)?;
        let mut comps = Vec::with_capacity(dim);
        for sig in 0..dim {
            let mut terms = vec![self.coord_dot(&symbols[sig], 2)];
            for_each_multi(dim, 2, |mn| {
                let entry = &gamma[flat_index(&[sig, mn[0], mn[1]], dim)];
                if entry.is_num_zero() {
                    return;
                }
                terms.push(Expr::prod(vec![
                    substitute_raw(entry, &rules),
                    self.coord_dot(&symbols[mn[0]], 1),
                    self.coord_dot(&symbols[mn[1]], 1),
                ]));
            });
            comps.push(Expr::sum(terms));
        }
        let comps = self.simplify_exprs(comps);
        self.register_derived(
            &id,
            Role::GeodesicFromChristoffel,
            "0",
            metric_id,
            &coords,
            vec![1],
            comps,
        )
    }

    /// Evaluate the deferred parameter derivatives of every cached
    /// representation of a tensor.
    pub fn activate_tensor(&mut self, id: &str) -> Result<String> {
        let asm = self.options.assumptions.clone();
        let keys: Vec<RepKey> = self.get(id)?.components.keys().cloned().collect();
        for key in keys {
            let comps: Vec<Expr> = self.get(id)?.components[&key]
                .iter()
                .map(|e| activate(e, &asm))
                .collect();
            self.get_mut(id)?.components.insert(key, comps);
        }
        Ok(id.to_string())
    }

    /// Change the session curve parameter; cached Lagrangian and geodesic
    /// components are rewritten retroactively. `None` resets the default.
    pub fn set_curve_parameter(&mut self, parameter: Option<&str>) -> Result<String> {
        let new = parameter
            .unwrap_or(crate::session::DEFAULT_CURVE_PARAMETER)
            .to_string();
        let old = self.options.curve_parameter.clone();
        if new == old {
            return Ok(new);
        }
        // must not collide with any coordinate symbol
        let coord_ids: Vec<String> = self
            .tensors
            .values()
            .filter(|t| t.role == Role::Coordinates)
            .map(|t| t.id.clone())
            .collect();
        for cid in &coord_ids {
            if self.coord_symbols(cid)?.contains(&new) {
                return Err(Error::CollidesWithCoordinate(new));
            }
        }
        for obj in self.tensors.values_mut() {
            if !matches!(
                obj.role,
                Role::Lagrangian | Role::GeodesicFromLagrangian | Role::GeodesicFromChristoffel
            ) {
                continue;
            }
            for comps in obj.components.values_mut() {
                for c in comps.iter_mut() {
                    *c = rename_parameter(c, &old, &new);
                }
            }
        }
        self.set_reserved_symbols(&[new.clone()]);
        self.options.curve_parameter = new.clone();
        Ok(new)
    }
}

/// Rename a curve parameter everywhere it appears, including the parameter
/// slot of deferred derivatives.
fn rename_parameter(e: &Expr, old: &str, new: &str) -> Expr {
    e.map(&mut |node| match node {
        Expr::Sym(s) if s == old => Expr::sym(new),
        Expr::Deferred {
            inner,
            param,
            order,
        } if param == old => Expr::Deferred {
            inner,
            param: new.to_string(),
            order,
        },
        other => other,
    })
}
