//! Built-in pipelines from a metric to its curvature tensors, with stage
//! reuse: each stage consumes the previous stage's object when it exists and
//! computes it otherwise. Results are cached under derived IDs
//! (`<metricId>Christoffel`, `<metricId>Riemann`, ...).

use crate::error::{Error, Result};
use crate::expr::{diff, Expr};
use crate::session::{Role, Session, TensorObject};
use crate::transform::{determinant, flat_index, for_each_multi};
use indexmap::IndexMap;

impl Session {
    fn require_metric(&self, metric_id: &str) -> Result<&TensorObject> {
        let obj = self.get(metric_id)?;
        if obj.role != Role::Metric {
            return Err(Error::UnknownMetric(metric_id.to_string()));
        }
        Ok(obj)
    }

    pub(crate) fn register_derived(
        &mut self,
        id: &str,
        role: Role,
        symbol: &str,
        metric_id: &str,
        coords: &str,
        indices: Vec<i8>,
        components: Vec<Expr>,
    ) -> Result<String> {
        let mut comps = IndexMap::new();
        comps.insert((indices.clone(), coords.to_string()), components);
        let obj = TensorObject {
            id: id.to_string(),
            role,
            symbol: symbol.to_string(),
            metric_id: Some(metric_id.to_string()),
            default_indices: indices,
            default_coords: coords.to_string(),
            components: comps,
            coord_data: None,
        };
        self.insert_object(obj, true)
    }

    /// Christoffel symbols of the Levi-Civita connection,
    /// Γ^λ_{μν} = ½ g^{λσ} (∂_μ g_{νσ} + ∂_ν g_{σμ} - ∂_σ g_{μν}),
    /// computed in the metric's default coordinates. Reuses
    /// `<metricId>Christoffel` when it already exists.
    pub fn calc_christoffel(&mut self, metric_id: &str) -> Result<String> {
        let id = format!("{metric_id}Christoffel");
        if self.exists(&id) {
            return Ok(id);
        }
        let coords = self.require_metric(metric_id)?.default_coords.clone();
        let dim = self.dimension(&coords)?;
        let symbols = self.coord_symbols(&coords)?;
        let g = self.represent(metric_id, &vec![-1, -1], &coords)?;
        let ginv = self.represent(metric_id, &vec![1, 1], &coords)?;
        // dg[k][i][j] = ∂_k g_{ij}
        let mut dg = vec![Expr::int(0); dim * dim * dim];
        for_each_multi(dim, 3, |m| {
            let (k, i, j) = (m[0], m[1], m[2]);
            dg[flat_index(m, dim)] = diff(&g[i * dim + j], &symbols[k]);
        });
        let at = |k: usize, i: usize, j: usize| &dg[(k * dim + i) * dim + j];
        let gamma = self.build_simplified(dim * dim * dim, |flat| {
            let (l, mu, nu) = (flat / (dim * dim), (flat / dim) % dim, flat % dim);
            let mut terms = Vec::with_capacity(dim);
            for s in 0..dim {
                let inv = &ginv[l * dim + s];
                if inv.is_num_zero() {
                    continue;
                }
                let bracket = Expr::sum(vec![
                    at(mu, nu, s).clone(),
                    at(nu, s, mu).clone(),
                    Expr::neg(at(s, mu, nu).clone()),
                ]);
                terms.push(Expr::prod(vec![Expr::rat(1, 2), inv.clone(), bracket]));
            }
            Expr::sum(terms)
        });
        self.stats.christoffel_builds += 1;
        self.register_derived(
            &id,
            Role::Christoffel,
            "Γ",
            metric_id,
            &coords,
            vec![1, -1, -1],
            gamma,
        )
    }

    /// Riemann curvature tensor,
    /// R^ρ_{σμν} = ∂_μ Γ^ρ_{νσ} - ∂_ν Γ^ρ_{μσ} + Γ^ρ_{μλ} Γ^λ_{νσ} - Γ^ρ_{νλ} Γ^λ_{μσ}.
    pub fn calc_riemann(&mut self, metric_id: &str) -> Result<String> {
        let id = format!("{metric_id}Riemann");
        if self.exists(&id) {
            return Ok(id);
        }
        let coords = self.require_metric(metric_id)?.default_coords.clone();
        let dim = self.dimension(&coords)?;
        let symbols = self.coord_symbols(&coords)?;
        let gamma_id = self.calc_christoffel(metric_id)?;
        let gamma = self.represent(&gamma_id, &vec![1, -1, -1], &coords)?;
        let g = |r: usize, m: usize, n: usize| &gamma[(r * dim + m) * dim + n];
        let riemann = self.build_simplified(dim * dim * dim * dim, |flat| {
            let rho = flat / (dim * dim * dim);
            let sig = (flat / (dim * dim)) % dim;
            let mu = (flat / dim) % dim;
            let nu = flat % dim;
            let mut terms = vec![
                diff(g(rho, nu, sig), &symbols[mu]),
                Expr::neg(diff(g(rho, mu, sig), &symbols[nu])),
            ];
            for lam in 0..dim {
                let a = g(rho, mu, lam);
                let b = g(lam, nu, sig);
                if !a.is_num_zero() && !b.is_num_zero() {
                    terms.push(Expr::prod(vec![a.clone(), b.clone()]));
                }
                let c = g(rho, nu, lam);
                let d = g(lam, mu, sig);
                if !c.is_num_zero() && !d.is_num_zero() {
                    terms.push(Expr::neg(Expr::prod(vec![c.clone(), d.clone()])));
                }
            }
            Expr::sum(terms)
        });
        self.stats.riemann_builds += 1;
        self.register_derived(
            &id,
            Role::Riemann,
            "R",
            metric_id,
            &coords,
            vec![1, -1, -1, -1],
            riemann,
        )
    }

    /// Ricci tensor: the trace of the first and third Riemann slots,
    /// R_{μν} = R^λ_{μλν}.
    pub fn calc_ricci_tensor(&mut self, metric_id: &str) -> Result<String> {
        let id = format!("{metric_id}RicciTensor");
        if self.exists(&id) {
            return Ok(id);
        }
        let coords = self.require_metric(metric_id)?.default_coords.clone();
        let dim = self.dimension(&coords)?;
        let riemann_id = self.calc_riemann(metric_id)?;
        let riemann = self.represent(&riemann_id, &vec![1, -1, -1, -1], &coords)?;
        let mut ricci = vec![Expr::int(0); dim * dim];
        for mu in 0..dim {
            for nu in 0..dim {
                let mut terms = Vec::with_capacity(dim);
                for lam in 0..dim {
                    let c = &riemann[((lam * dim + mu) * dim + lam) * dim + nu];
                    if !c.is_num_zero() {
                        terms.push(c.clone());
                    }
                }
                ricci[mu * dim + nu] = Expr::sum(terms);
            }
        }
        let ricci = self.simplify_exprs(ricci);
        self.register_derived(
            &id,
            Role::RicciTensor,
            "R",
            metric_id,
            &coords,
            vec![-1, -1],
            ricci,
        )
    }

    /// Ricci scalar: the trace of the Ricci tensor, R = g^{μν} R_{μν}.
    pub fn calc_ricci_scalar(&mut self, metric_id: &str) -> Result<String> {
        let id = format!("{metric_id}RicciScalar");
        if self.exists(&id) {
            return Ok(id);
        }
        let coords = self.require_metric(metric_id)?.default_coords.clone();
        let dim = self.dimension(&coords)?;
        let ricci_id = self.calc_ricci_tensor(metric_id)?;
        let ricci = self.represent(&ricci_id, &vec![-1, -1], &coords)?;
        let ginv = self.represent(metric_id, &vec![1, 1], &coords)?;
        let mut terms = Vec::new();
        for mu in 0..dim {
            for nu in 0..dim {
                let a = &ginv[mu * dim + nu];
                let b = &ricci[mu * dim + nu];
                if !a.is_num_zero() && !b.is_num_zero() {
                    terms.push(Expr::prod(vec![a.clone(), b.clone()]));
                }
            }
        }
        let scalar = self.simplify_exprs(vec![Expr::sum(terms)]);
        self.register_derived(
            &id,
            Role::RicciScalar,
            "R",
            metric_id,
            &coords,
            vec![],
            scalar,
        )
    }

    /// Einstein tensor, G_{μν} = R_{μν} - ½ g_{μν} R.
    pub fn calc_einstein(&mut self, metric_id: &str) -> Result<String> {
        let id = format!("{metric_id}Einstein");
        if self.exists(&id) {
            return Ok(id);
        }
        let coords = self.require_metric(metric_id)?.default_coords.clone();
        let dim = self.dimension(&coords)?;
        let ricci_id = self.calc_ricci_tensor(metric_id)?;
        let scalar_id = self.calc_ricci_scalar(metric_id)?;
        let ricci = self.represent(&ricci_id, &vec![-1, -1], &coords)?;
        let scalar = self.represent(&scalar_id, &vec![], &coords)?[0].clone();
        let g = self.represent(metric_id, &vec![-1, -1], &coords)?;
        let mut einstein = vec![Expr::int(0); dim * dim];
        for i in 0..dim * dim {
            einstein[i] = Expr::sub(
                ricci[i].clone(),
                Expr::prod(vec![Expr::rat(1, 2), g[i].clone(), scalar.clone()]),
            );
        }
        let einstein = self.simplify_exprs(einstein);
        self.register_derived(
            &id,
            Role::Einstein,
            "G",
            metric_id,
            &coords,
            vec![-1, -1],
            einstein,
        )
    }

    /// The line element Σ g_{μν} dx^μ dx^ν, with the differentials treated
    /// as fresh symbols `d<coordinate>`.
    pub fn line_element(&mut self, metric_id: &str, coords: Option<&str>) -> Result<Expr> {
        let coords = match coords {
            Some(c) => c.to_string(),
            None => self.require_metric(metric_id)?.default_coords.clone(),
        };
        let dim = self.dimension(&coords)?;
        let symbols = self.coord_symbols(&coords)?;
        let g = self.represent(metric_id, &vec![-1, -1], &coords)?;
        let mut terms = Vec::new();
        for mu in 0..dim {
            for nu in mu..dim {
                let entry = &g[mu * dim + nu];
                if entry.is_num_zero() {
                    continue;
                }
                let dmu = Expr::sym(format!("d{}", symbols[mu]));
                if mu == nu {
                    terms.push(Expr::prod(vec![
                        entry.clone(),
                        Expr::pow(dmu, Expr::int(2)),
                    ]));
                } else {
                    let dnu = Expr::sym(format!("d{}", symbols[nu]));
                    terms.push(Expr::prod(vec![Expr::int(2), entry.clone(), dmu, dnu]));
                }
            }
        }
        Ok(self.simplify_exprs(vec![Expr::sum(terms)]).remove(0))
    }

    /// The squared volume element: the determinant of the metric in the
    /// chosen coordinates.
    pub fn volume_element_squared(
        &mut self,
        metric_id: &str,
        coords: Option<&str>,
    ) -> Result<Expr> {
        let coords = match coords {
            Some(c) => c.to_string(),
            None => self.require_metric(metric_id)?.default_coords.clone(),
        };
        let dim = self.dimension(&coords)?;
        let g = self.represent(metric_id, &vec![-1, -1], &coords)?;
        let matrix: Vec<Vec<Expr>> = (0..dim)
            .map(|i| g[i * dim..(i + 1) * dim].to_vec())
            .collect();
        Ok(self
            .simplify_exprs(vec![determinant(&matrix)])
            .remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{is_zero, parse_expr};

    fn syms(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn diag(entries: &[&str]) -> Vec<Vec<Expr>> {
        let n = entries.len();
        let mut m = vec![vec![Expr::int(0); n]; n];
        for (i, e) in entries.iter().enumerate() {
            m[i][i] = parse_expr(e).unwrap();
        }
        m
    }

    fn schwarzschild_session() -> Session {
        let mut s = Session::new();
        s.new_coordinates("Spherical", &syms(&["t", "r", "θ", "φ"])).unwrap();
        s.set_reserved_symbols(&syms(&["M"]));
        s.new_metric(
            "Schwarzschild",
            "Spherical",
            diag(&["-(1 - 2*M/r)", "1/(1 - 2*M/r)", "r^2", "r^2*sin(θ)^2"]),
            None,
        )
        .unwrap();
        s
    }

    fn flrw_session() -> Session {
        let mut s = Session::new();
        s.new_coordinates("Spherical", &syms(&["t", "r", "θ", "φ"])).unwrap();
        s.set_reserved_symbols(&syms(&["a", "k"]));
        s.new_metric(
            "FLRW",
            "Spherical",
            diag(&[
                "-1",
                "a(t)^2/(1 - k*r^2)",
                "a(t)^2*r^2",
                "a(t)^2*r^2*sin(θ)^2",
            ]),
            None,
        )
        .unwrap();
        s
    }

    fn check(session: &Session, actual: &Expr, expected: &str) {
        let expected = parse_expr(expected).unwrap();
        let diff = Expr::sub(actual.clone(), expected.clone());
        assert!(
            is_zero(&diff, &session.options.assumptions).unwrap(),
            "expected {expected:?}, got {actual:?}"
        );
    }

    #[test]
    fn schwarzschild_christoffel_values() {
        let mut s = schwarzschild_session();
        let id = s.calc_christoffel("Schwarzschild").unwrap();
        assert_eq!(id, "SchwarzschildChristoffel");
        let dim = 4;
        let gamma = s.represent(&id, &vec![1, -1, -1], "Spherical").unwrap();
        let at = |l: usize, m: usize, n: usize| &gamma[(l * dim + m) * dim + n];
        // coordinate order: t=0, r=1, θ=2, φ=3
        check(&s, at(0, 0, 1), "M/(r*(r - 2*M))");
        check(&s, at(0, 1, 0), "M/(r*(r - 2*M))");
        check(&s, at(1, 0, 0), "M*(r - 2*M)/r^3");
        check(&s, at(1, 1, 1), "M/(2*M*r - r^2)");
        check(&s, at(1, 2, 2), "2*M - r");
        check(&s, at(1, 3, 3), "(2*M - r)*sin(θ)^2");
        check(&s, at(2, 1, 2), "1/r");
        check(&s, at(3, 1, 3), "1/r");
        check(&s, at(2, 3, 3), "-cos(θ)*sin(θ)");
        check(&s, at(3, 2, 3), "cos(θ)/sin(θ)");
        // everything else vanishes
        let nonzero: [(usize, usize, usize); 13] = [
            (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1), (1, 2, 2), (1, 3, 3),
            (2, 1, 2), (2, 2, 1), (3, 1, 3), (3, 3, 1), (2, 3, 3), (3, 2, 3), (3, 3, 2),
        ];
        for l in 0..dim {
            for m in 0..dim {
                for n in 0..dim {
                    if !nonzero.contains(&(l, m, n)) {
                        assert!(
                            is_zero(at(l, m, n), &s.options.assumptions).unwrap(),
                            "expected zero at ({l},{m},{n}), got {:?}",
                            at(l, m, n)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn minkowski_curvature_vanishes() {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        s.new_metric("Minkowski", "Cartesian", diag(&["-1", "1", "1", "1"]), Some("η"))
            .unwrap();
        let gamma_id = s.calc_christoffel("Minkowski").unwrap();
        let gamma = s.represent(&gamma_id, &vec![1, -1, -1], "Cartesian").unwrap();
        assert!(gamma.iter().all(|e| e.is_num_zero()));
        let riemann_id = s.calc_riemann("Minkowski").unwrap();
        let riemann = s
            .represent(&riemann_id, &vec![1, -1, -1, -1], "Cartesian")
            .unwrap();
        assert!(riemann.iter().all(|e| e.is_num_zero()));
        let einstein_id = s.calc_einstein("Minkowski").unwrap();
        let e = s.represent(&einstein_id, &vec![-1, -1], "Cartesian").unwrap();
        assert!(e.iter().all(|e| e.is_num_zero()));
    }

    #[test]
    fn schwarzschild_is_vacuum() {
        let mut s = schwarzschild_session();
        let ricci_id = s.calc_ricci_tensor("Schwarzschild").unwrap();
        let ricci = s.represent(&ricci_id, &vec![-1, -1], "Spherical").unwrap();
        for c in &ricci {
            assert!(
                is_zero(c, &s.options.assumptions).unwrap(),
                "nonzero Ricci component {c:?}"
            );
        }
    }

    #[test]
    fn schwarzschild_riemann_sample_values() {
        let mut s = schwarzschild_session();
        let id = s.calc_riemann("Schwarzschild").unwrap();
        let r = s.represent(&id, &vec![1, -1, -1, -1], "Spherical").unwrap();
        let dim = 4;
        // R^t_{rtr} = 2M/(r^2(r-2M))
        check(&s, &r[((0 * dim + 1) * dim + 0) * dim + 1], "2*M/(r^2*(r - 2*M))");
        let low = s
            .represent(&id, &vec![-1, -1, -1, -1], "Spherical")
            .unwrap();
        // R_{trtr} = -2M/r^3
        check(&s, &low[((0 * dim + 1) * dim + 0) * dim + 1], "-2*M/r^3");
    }

    #[test]
    fn flrw_curvature_chain() {
        let mut s = flrw_session();
        let gamma_id = s.calc_christoffel("FLRW").unwrap();
        let gamma = s.represent(&gamma_id, &vec![1, -1, -1], "Spherical").unwrap();
        let dim = 4;
        let at = |l: usize, m: usize, n: usize| &gamma[(l * dim + m) * dim + n];
        check(&s, at(0, 1, 1), "a(t)*D(a(t),t)/(1 - k*r^2)");
        check(&s, at(0, 2, 2), "a(t)*r^2*D(a(t),t)");
        check(&s, at(1, 0, 1), "D(a(t),t)/a(t)");
        check(&s, at(1, 1, 1), "k*r/(1 - k*r^2)");
        check(&s, at(1, 2, 2), "r*(-1 + k*r^2)");
        check(&s, at(3, 2, 3), "cos(θ)/sin(θ)");

        let riemann_id = s.calc_riemann("FLRW").unwrap();
        let riemann = s
            .represent(&riemann_id, &vec![1, -1, -1, -1], "Spherical")
            .unwrap();
        check(
            &s,
            &riemann[((0 * dim + 1) * dim + 0) * dim + 1],
            "a(t)*D(a(t),t,t)/(1 - k*r^2)",
        );

        let ricci_id = s.calc_ricci_tensor("FLRW").unwrap();
        let ricci = s.represent(&ricci_id, &vec![-1, -1], "Spherical").unwrap();
        check(&s, &ricci[0], "-3*D(a(t),t,t)/a(t)");
        check(
            &s,
            &ricci[1 * dim + 1],
            "(2*(k + D(a(t),t)^2) + a(t)*D(a(t),t,t))/(1 - k*r^2)",
        );

        let scalar_id = s.calc_ricci_scalar("FLRW").unwrap();
        let scalar = s.represent(&scalar_id, &vec![], "Spherical").unwrap();
        check(
            &s,
            &scalar[0],
            "6*(k + D(a(t),t)^2 + a(t)*D(a(t),t,t))/a(t)^2",
        );

        let einstein_id = s.calc_einstein("FLRW").unwrap();
        let e = s.represent(&einstein_id, &vec![-1, -1], "Spherical").unwrap();
        check(&s, &e[0], "3*(k + D(a(t),t)^2)/a(t)^2");
        check(
            &s,
            &e[1 * dim + 1],
            "(k + D(a(t),t)^2 + 2*a(t)*D(a(t),t,t))/(-1 + k*r^2)",
        );
        check(
            &s,
            &e[2 * dim + 2],
            "-r^2*(k + D(a(t),t)^2 + 2*a(t)*D(a(t),t,t))",
        );
    }

    #[test]
    fn riemann_reuses_christoffel_stage() {
        let mut s = schwarzschild_session();
        s.calc_christoffel("Schwarzschild").unwrap();
        assert_eq!(s.stats.christoffel_builds, 1);
        s.calc_riemann("Schwarzschild").unwrap();
        assert_eq!(s.stats.christoffel_builds, 1);
        s.calc_riemann("Schwarzschild").unwrap();
        assert_eq!(s.stats.riemann_builds, 1);
    }

    #[test]
    fn line_and_volume_elements() {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        s.new_metric("Minkowski", "Cartesian", diag(&["-1", "1", "1", "1"]), Some("η"))
            .unwrap();
        let le = s.line_element("Minkowski", None).unwrap();
        check(&s, &le, "-dt^2 + dx^2 + dy^2 + dz^2");
        let vol = s.volume_element_squared("Minkowski", None).unwrap();
        assert_eq!(vol, Expr::int(-1));

        let mut s2 = schwarzschild_session();
        let le2 = s2.line_element("Schwarzschild", None).unwrap();
        check(
            &s2,
            &le2,
            "dr^2/(1 - 2*M/r) + (-1 + 2*M/r)*dt^2 + r^2*dθ^2 + r^2*sin(θ)^2*dφ^2",
        );
        let vol2 = s2.volume_element_squared("Schwarzschild", None).unwrap();
        check(&s2, &vol2, "-r^4*sin(θ)^2");

        let mut s3 = flrw_session();
        let vol3 = s3.volume_element_squared("FLRW", None).unwrap();
        check(&s3, &vol3, "r^4*a(t)^6*sin(θ)^2/(-1 + k*r^2)");
    }

    #[test]
    fn alcubierre_line_element() {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        s.set_reserved_symbols(&syms(&["v", "f"]));
        let f = "f(t,x,y,z)";
        let v = "v(t)";
        let mut m = diag(&["1", "1", "1", "1"]);
        m[0][0] = parse_expr(&format!("-1 + {v}^2*{f}^2")).unwrap();
        m[0][3] = parse_expr(&format!("-{v}*{f}")).unwrap();
        m[3][0] = parse_expr(&format!("-{v}*{f}")).unwrap();
        s.new_metric("Alcubierre", "Cartesian", m, None).unwrap();
        let le = s.line_element("Alcubierre", None).unwrap();
        check(
            &s,
            &le,
            "dx^2 + dy^2 + dz^2 - 2*dt*dz*f(t,x,y,z)*v(t) + dt^2*(-1 + f(t,x,y,z)^2*v(t)^2)",
        );
        let vol = s.volume_element_squared("Alcubierre", None).unwrap();
        assert_eq!(vol, Expr::int(-1));
    }
}
