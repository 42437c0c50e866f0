//! The session registry: tensor objects keyed by unique string IDs, plus the
//! session-global configuration (assumptions, reserved symbols, index
//! letters, overwrite policy, curve parameter, parallelization).

use crate::error::{Error, Result};
use crate::expr::{is_zero, simplify, Assumptions, Expr, Predicate, SubRule};
use indexmap::IndexMap;
use std::sync::Arc;

/// Ordered list of index positions: `+1` upper, `-1` lower. The empty
/// configuration denotes a scalar.
pub type IndexConfig = Vec<i8>;

/// One cached representation key: (index configuration, coordinate system).
pub type RepKey = (IndexConfig, String);

pub const FORMAT_VERSION: &str = "1.0";

/// Deduplicated Greek default for index letters (omicron is omitted since it
/// reads as a Latin o).
pub const DEFAULT_INDEX_LETTERS: &str = "μνρσκλαβγδεζηθιξπτυφχψω";

pub const DEFAULT_CURVE_PARAMETER: &str = "λ";

pub const PLACEHOLDER_SYMBOL: &str = "□";

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Role {
    Coordinates,
    Metric,
    Tensor,
    Christoffel,
    Riemann,
    RicciTensor,
    RicciScalar,
    Einstein,
    Lagrangian,
    GeodesicFromLagrangian,
    GeodesicFromChristoffel,
    Temporary,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Coordinates => "Coordinates",
            Role::Metric => "Metric",
            Role::Tensor => "Tensor",
            Role::Christoffel => "Christoffel",
            Role::Riemann => "Riemann",
            Role::RicciTensor => "RicciTensor",
            Role::RicciScalar => "RicciScalar",
            Role::Einstein => "Einstein",
            Role::Lagrangian => "Lagrangian",
            Role::GeodesicFromLagrangian => "GeodesicFromLagrangian",
            Role::GeodesicFromChristoffel => "GeodesicFromChristoffel",
            Role::Temporary => "Temporary",
        }
    }

    pub fn from_str(s: &str) -> Option<Role> {
        Some(match s {
            "Coordinates" => Role::Coordinates,
            "Metric" => Role::Metric,
            "Tensor" => Role::Tensor,
            "Christoffel" => Role::Christoffel,
            "Riemann" => Role::Riemann,
            "RicciTensor" => Role::RicciTensor,
            "RicciScalar" => Role::RicciScalar,
            "Einstein" => Role::Einstein,
            "Lagrangian" => Role::Lagrangian,
            "GeodesicFromLagrangian" => Role::GeodesicFromLagrangian,
            "GeodesicFromChristoffel" => Role::GeodesicFromChristoffel,
            "Temporary" => Role::Temporary,
            _ => return None,
        })
    }

    /// Roles produced by the curvature and geodesic pipelines; these are the
    /// objects deleted when their metric is overwritten.
    pub fn is_derived(&self) -> bool {
        matches!(
            self,
            Role::Christoffel
                | Role::Riemann
                | Role::RicciTensor
                | Role::RicciScalar
                | Role::Einstein
                | Role::Lagrangian
                | Role::GeodesicFromLagrangian
                | Role::GeodesicFromChristoffel
        )
    }
}

/// Cached Jacobian data for one coordinate transformation edge, all expressed
/// in the target coordinates: `j[μ][μ'] = ∂x^μ/∂x^{μ'}` (old by new),
/// `jinv[μ'][μ] = ∂x^{μ'}/∂x^μ`, and the second derivatives
/// `d2[λ][μ'][ν'] = ∂²x^λ/∂x^{μ'}∂x^{ν'}`.
#[derive(Clone, Debug)]
pub struct JacobianSet {
    pub j: Vec<Vec<Expr>>,
    pub jinv: Vec<Vec<Expr>>,
    pub d2: Vec<Vec<Vec<Expr>>>,
}

/// Extra data carried by Coordinates-role objects.
#[derive(Clone, Debug, Default)]
pub struct CoordData {
    /// Outgoing transformation rules, keyed by target system.
    pub transformations: IndexMap<String, Vec<SubRule>>,
    /// Jacobian sets for those edges.
    pub jacobians: IndexMap<String, JacobianSet>,
}

#[derive(Clone, Debug)]
pub struct TensorObject {
    pub id: String,
    pub role: Role,
    pub symbol: String,
    pub metric_id: Option<String>,
    pub default_indices: IndexConfig,
    pub default_coords: String,
    pub components: IndexMap<RepKey, Vec<Expr>>,
    pub coord_data: Option<CoordData>,
}

impl TensorObject {
    pub fn rank(&self) -> usize {
        self.default_indices.len()
    }
}

#[derive(Clone, Debug)]
pub struct SessionOptions {
    pub index_letters: Vec<char>,
    pub reserved_symbols: Vec<String>,
    pub assumptions: Assumptions,
    pub allow_overwrite: bool,
    pub parallelize: bool,
    pub workers: usize,
    pub curve_parameter: String,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            index_letters: DEFAULT_INDEX_LETTERS.chars().collect(),
            reserved_symbols: Vec::new(),
            assumptions: Assumptions::default(),
            allow_overwrite: false,
            parallelize: false,
            workers: 0, // 0 = logical cores
            curve_parameter: DEFAULT_CURVE_PARAMETER.to_string(),
        }
    }
}

/// Counters for observing pipeline stage reuse and parallel work.
#[derive(Clone, Debug, Default)]
pub struct SessionStats {
    pub christoffel_builds: usize,
    pub riemann_builds: usize,
}

pub struct Session {
    pub(crate) tensors: IndexMap<String, TensorObject>,
    pub options: SessionOptions,
    pub stats: SessionStats,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl Default for Session {
    fn default() -> Self {
        Self::new()
    }
}

impl Session {
    pub fn new() -> Session {
        Session {
            tensors: IndexMap::new(),
            options: SessionOptions::default(),
            stats: SessionStats::default(),
            pool: None,
        }
    }

    pub fn get(&self, id: &str) -> Result<&TensorObject> {
        self.tensors
            .get(id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub(crate) fn get_mut(&mut self, id: &str) -> Result<&mut TensorObject> {
        self.tensors
            .get_mut(id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.tensors.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Dimension of a coordinate system.
    pub fn dimension(&self, coords_id: &str) -> Result<usize> {
        let obj = self
            .tensors
            .get(coords_id)
            .ok_or_else(|| Error::UnknownCoords(coords_id.to_string()))?;
        if obj.role != Role::Coordinates {
            return Err(Error::UnknownCoords(coords_id.to_string()));
        }
        Ok(obj
            .components
            .get(&(vec![1], coords_id.to_string()))
            .map(|c| c.len())
            .unwrap_or(0))
    }

    /// Coordinate symbols of a system.
    pub fn coord_symbols(&self, coords_id: &str) -> Result<Vec<String>> {
        let obj = self.get(coords_id)?;
        if obj.role != Role::Coordinates {
            return Err(Error::UnknownCoords(coords_id.to_string()));
        }
        let comps = obj
            .components
            .get(&(vec![1], coords_id.to_string()))
            .ok_or_else(|| Error::UnknownCoords(coords_id.to_string()))?;
        Ok(comps
            .iter()
            .map(|e| match e {
                Expr::Sym(s) => s.clone(),
                other => format!("{other:?}"),
            })
            .collect())
    }

    pub(crate) fn check_id_free(&mut self, id: &str) -> Result<bool> {
        if id.starts_with('$') {
            return Err(Error::Schema(
                "tensor IDs may not start with '$'".to_string(),
            ));
        }
        if self.exists(id) {
            if !self.options.allow_overwrite {
                return Err(Error::DuplicateId(id.to_string()));
            }
            return Ok(true); // caller emits the overwrite warning
        }
        Ok(false)
    }

    /// Create a coordinate-system object. The symbols become reserved.
    pub fn new_coordinates(&mut self, id: &str, symbols: &[String]) -> Result<String> {
        if symbols.is_empty() {
            return Err(Error::EmptySymbols);
        }
        let mut uniq = symbols.to_vec();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != symbols.len() {
            return Err(Error::DuplicateSymbols);
        }
        self.check_id_free(id)?;
        let comps: Vec<Expr> = symbols.iter().map(Expr::sym).collect();
        let mut components = IndexMap::new();
        components.insert((vec![1], id.to_string()), comps);
        self.tensors.insert(
            id.to_string(),
            TensorObject {
                id: id.to_string(),
                role: Role::Coordinates,
                symbol: "x".to_string(),
                metric_id: None,
                default_indices: vec![1],
                default_coords: id.to_string(),
                components,
                coord_data: Some(CoordData::default()),
            },
        );
        for s in symbols {
            self.reserve_symbol(s);
        }
        Ok(id.to_string())
    }

    /// Create a metric from its components with two lower indices.
    pub fn new_metric(
        &mut self,
        id: &str,
        coords_id: &str,
        components: Vec<Vec<Expr>>,
        symbol: Option<&str>,
    ) -> Result<String> {
        let dim = self.dimension(coords_id)?;
        if components.len() != dim || components.iter().any(|row| row.len() != dim) {
            return Err(Error::ShapeMismatch {
                expected: dim * dim,
                got: components.iter().map(|r| r.len()).sum(),
            });
        }
        let asm = self.options.assumptions.clone();
        // symmetry: the antisymmetric part must vanish
        for i in 0..dim {
            for j in (i + 1)..dim {
                let diff = Expr::sub(components[i][j].clone(), components[j][i].clone());
                if !is_zero(&diff, &asm)? {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        let det = crate::transform::determinant(&components);
        if is_zero(&det, &asm)? {
            return Err(Error::Singular);
        }
        let overwriting = self.check_id_free(id)?;
        if overwriting {
            self.delete_derived_of_metric(id);
        }
        let flat: Vec<Expr> = components
            .into_iter()
            .flatten()
            .collect();
        let flat = self.simplify_exprs(flat);
        let mut comps = IndexMap::new();
        comps.insert((vec![-1, -1], coords_id.to_string()), flat);
        self.tensors.insert(
            id.to_string(),
            TensorObject {
                id: id.to_string(),
                role: Role::Metric,
                symbol: symbol.unwrap_or("g").to_string(),
                metric_id: None,
                default_indices: vec![-1, -1],
                default_coords: coords_id.to_string(),
                components: comps,
                coord_data: None,
            },
        );
        Ok(id.to_string())
    }

    /// Remove the curvature/geodesic objects derived from a metric, used when
    /// the metric is overwritten.
    pub(crate) fn delete_derived_of_metric(&mut self, metric_id: &str) {
        let doomed: Vec<String> = self
            .tensors
            .values()
            .filter(|t| {
                t.role.is_derived()
                    && t.metric_id.as_deref() == Some(metric_id)
                    && t.id.starts_with(metric_id)
            })
            .map(|t| t.id.clone())
            .collect();
        for id in doomed {
            self.tensors.shift_remove(&id);
        }
    }

    /// Create a general tensor in a given manifold.
    pub fn new_tensor(
        &mut self,
        id: &str,
        metric_id: &str,
        coords_id: Option<&str>,
        indices: IndexConfig,
        components: Vec<Expr>,
        symbol: Option<&str>,
    ) -> Result<String> {
        let metric = self.get(metric_id)?;
        if metric.role != Role::Metric {
            return Err(Error::UnknownMetric(metric_id.to_string()));
        }
        let coords_id = coords_id
            .map(|s| s.to_string())
            .unwrap_or_else(|| metric.default_coords.clone());
        let dim = self.dimension(&coords_id)?;
        let expected = dim.pow(indices.len() as u32);
        if components.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: components.len(),
            });
        }
        self.check_id_free(id)?;
        let components = self.simplify_exprs(components);
        let mut comps = IndexMap::new();
        comps.insert((indices.clone(), coords_id.clone()), components);
        self.tensors.insert(
            id.to_string(),
            TensorObject {
                id: id.to_string(),
                role: Role::Tensor,
                symbol: symbol.unwrap_or(PLACEHOLDER_SYMBOL).to_string(),
                metric_id: Some(metric_id.to_string()),
                default_indices: indices,
                default_coords: coords_id,
                components: comps,
                coord_data: None,
            },
        );
        Ok(id.to_string())
    }

    /// Insert a fully formed object (used by the formula engine, pipelines
    /// and the importer). Honors the overwrite policy except for the ids the
    /// engine itself owns (the default "Result" target).
    pub(crate) fn insert_object(&mut self, obj: TensorObject, force: bool) -> Result<String> {
        if !force {
            self.check_id_free(&obj.id)?;
        }
        let id = obj.id.clone();
        self.tensors.insert(id.clone(), obj);
        Ok(id)
    }

    /// Permanently delete a tensor object.
    pub fn delete(&mut self, id: &str) -> Result<()> {
        let obj = self.get(id)?;
        match obj.role {
            Role::Coordinates => {
                for other in self.tensors.values() {
                    if other.id != id && other.default_coords == id {
                        return Err(Error::InUseAsCoords {
                            coords: id.to_string(),
                            user: other.id.clone(),
                        });
                    }
                }
            }
            Role::Metric => {
                for other in self.tensors.values() {
                    if other.metric_id.as_deref() == Some(id) {
                        return Err(Error::InUseAsMetric {
                            metric: id.to_string(),
                            user: other.id.clone(),
                        });
                    }
                }
            }
            _ => {}
        }
        self.tensors.shift_remove(id);
        // drop dangling transformation edges and cached representations
        for other in self.tensors.values_mut() {
            if let Some(cd) = &mut other.coord_data {
                cd.transformations.shift_remove(id);
                cd.jacobians.shift_remove(id);
            }
            other.components.retain(|(_, coords), _| coords != id);
        }
        Ok(())
    }

    /// Change the ID of a tensor object; references from every other object
    /// are rewritten so nothing dangles.
    pub fn change_id(&mut self, old: &str, new: &str) -> Result<String> {
        self.get(old)?;
        if self.exists(new) {
            return Err(Error::DuplicateId(new.to_string()));
        }
        if new.starts_with('$') {
            return Err(Error::Schema(
                "tensor IDs may not start with '$'".to_string(),
            ));
        }
        let mut obj = self.tensors.shift_remove(old).expect("checked above");
        obj.id = new.to_string();
        if obj.default_coords == old {
            obj.default_coords = new.to_string();
        }
        obj.components = obj
            .components
            .into_iter()
            .map(|((idx, coords), v)| {
                let coords = if coords == old {
                    new.to_string()
                } else {
                    coords
                };
                ((idx, coords), v)
            })
            .collect();
        self.tensors.insert(new.to_string(), obj);
        for other in self.tensors.values_mut() {
            if other.metric_id.as_deref() == Some(old) {
                other.metric_id = Some(new.to_string());
            }
            if other.default_coords == old {
                other.default_coords = new.to_string();
            }
            other.components = std::mem::take(&mut other.components)
                .into_iter()
                .map(|((idx, coords), v)| {
                    let coords = if coords == old {
                        new.to_string()
                    } else {
                        coords
                    };
                    ((idx, coords), v)
                })
                .collect();
            if let Some(cd) = &mut other.coord_data {
                cd.transformations = std::mem::take(&mut cd.transformations)
                    .into_iter()
                    .map(|(k, v)| (if k == old { new.to_string() } else { k }, v))
                    .collect();
                cd.jacobians = std::mem::take(&mut cd.jacobians)
                    .into_iter()
                    .map(|(k, v)| (if k == old { new.to_string() } else { k }, v))
                    .collect();
            }
        }
        Ok(new.to_string())
    }

    pub fn change_symbol(&mut self, id: &str, symbol: &str) -> Result<String> {
        self.get_mut(id)?.symbol = symbol.to_string();
        Ok(id.to_string())
    }

    pub fn change_default_indices(&mut self, id: &str, indices: IndexConfig) -> Result<String> {
        let obj = self.get(id)?;
        if matches!(obj.role, Role::Coordinates | Role::Metric) {
            return Err(Error::RoleForbidden(obj.role.as_str().to_string()));
        }
        if indices.len() != obj.rank() {
            return Err(Error::RankMismatch {
                expected: obj.rank(),
                got: indices.len(),
            });
        }
        self.get_mut(id)?.default_indices = indices;
        Ok(id.to_string())
    }

    pub fn change_default_coords(&mut self, id: &str, coords_id: &str) -> Result<String> {
        self.dimension(coords_id)?; // validates role Coordinates
        let obj = self.get(id)?;
        if obj.role == Role::Coordinates {
            return Err(Error::RoleForbidden(obj.role.as_str().to_string()));
        }
        self.get_mut(id)?.default_coords = coords_id.to_string();
        Ok(id.to_string())
    }

    fn reserve_symbol(&mut self, s: &str) {
        if !self.options.reserved_symbols.iter().any(|r| r == s) {
            self.options.reserved_symbols.push(s.to_string());
        }
    }

    /// Reserve symbols; returns the current reserved list.
    pub fn set_reserved_symbols(&mut self, symbols: &[String]) -> Vec<String> {
        for s in symbols {
            self.reserve_symbol(s);
        }
        self.options.reserved_symbols.clone()
    }

    /// Append an assumption predicate; they accumulate.
    pub fn add_assumption(&mut self, p: Predicate) -> Assumptions {
        self.options.assumptions.add(p);
        self.options.assumptions.clone()
    }

    /// Clear user predicates (the real-variables flag is separate).
    pub fn clear_assumptions(&mut self) -> Assumptions {
        self.options.assumptions.clear_user();
        self.options.assumptions.clone()
    }

    pub fn set_assume_real(&mut self, on: bool) -> Assumptions {
        self.options.assumptions.assume_real = on;
        self.options.assumptions.clone()
    }

    /// Change index letters; `None` resets the default sequence.
    pub fn set_index_letters(&mut self, letters: Option<&str>) -> String {
        self.options.index_letters = letters
            .unwrap_or(DEFAULT_INDEX_LETTERS)
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect();
        self.options.index_letters.iter().collect()
    }

    pub fn set_allow_overwrite(&mut self, on: bool) -> bool {
        self.options.allow_overwrite = on;
        on
    }

    /// Toggle parallel simplification. Returns the worker count in use.
    pub fn set_parallelization(&mut self, on: bool) -> usize {
        self.options.parallelize = on;
        self.pool = None;
        if on {
            self.worker_count()
        } else {
            0
        }
    }

    pub fn set_workers(&mut self, workers: usize) {
        self.options.workers = workers;
        self.pool = None;
    }

    pub fn worker_count(&self) -> usize {
        if self.options.workers > 0 {
            self.options.workers
        } else {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        }
    }

    fn pool(&mut self) -> Arc<rayon::ThreadPool> {
        let workers = self.worker_count();
        if self.pool.is_none() {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("worker pool");
            self.pool = Some(Arc::new(pool));
        }
        self.pool.as_ref().unwrap().clone()
    }

    /// Simplify a batch of components under the session assumptions,
    /// fanning out to the worker pool when parallelization is on.
    pub(crate) fn simplify_exprs(&mut self, exprs: Vec<Expr>) -> Vec<Expr> {
        let asm = self.options.assumptions.clone();
        if self.options.parallelize && exprs.len() > 1 {
            use rayon::prelude::*;
            let pool = self.pool();
            pool.install(|| {
                exprs
                    .into_par_iter()
                    .map(|e| simplify(&e, &asm))
                    .collect()
            })
        } else {
            exprs.iter().map(|e| simplify(e, &asm)).collect()
        }
    }

    /// Build and simplify `n` components; each worker runs the builder for
    /// its own index, so component construction parallelizes along with the
    /// simplification.
    pub(crate) fn build_simplified<F>(&mut self, n: usize, builder: F) -> Vec<Expr>
    where
        F: Fn(usize) -> Expr + Sync,
    {
        let asm = self.options.assumptions.clone();
        if self.options.parallelize && n > 1 {
            use rayon::prelude::*;
            let pool = self.pool();
            pool.install(|| {
                (0..n)
                    .into_par_iter()
                    .map(|i| simplify(&builder(i), &asm))
                    .collect()
            })
        } else {
            (0..n).map(|i| simplify(&builder(i), &asm)).collect()
        }
    }

    /// Re-simplify every cached representation of a tensor under the current
    /// assumptions. Used after the assumptions change.
    pub fn simplify_tensor(&mut self, id: &str) -> Result<String> {
        let keys: Vec<RepKey> = self.get(id)?.components.keys().cloned().collect();
        for key in keys {
            let comps = self.get(id)?.components[&key].clone();
            let comps = self.simplify_exprs(comps);
            self.get_mut(id)?.components.insert(key, comps);
        }
        Ok(id.to_string())
    }

    /// Human-readable report on one object or (with `None`) the whole session.
    pub fn info(&self, id: Option<&str>) -> Result<String> {
        match id {
            Some(id) => {
                let obj = self.get(id)?;
                let mut out = String::new();
                out.push_str(&format!("ID: {}\n", obj.id));
                out.push_str(&format!("Symbol: {}\n", obj.symbol));
                out.push_str(&format!("Role: {}\n", obj.role.as_str()));
                out.push_str(&format!("Rank: {}\n", obj.rank()));
                if let Some(m) = &obj.metric_id {
                    out.push_str(&format!("Metric: {m}\n"));
                }
                if obj.role != Role::Coordinates {
                    out.push_str(&format!("Default Coordinates: {}\n", obj.default_coords));
                }
                out.push_str(&format!("Default Indices: {:?}\n", obj.default_indices));
                if obj.role == Role::Coordinates {
                    let users: Vec<&str> = self
                        .tensors
                        .values()
                        .filter(|t| t.id != obj.id && t.default_coords == obj.id)
                        .map(|t| t.id.as_str())
                        .collect();
                    if !users.is_empty() {
                        out.push_str(&format!(
                            "Default Coordinates For: {}\n",
                            users.join(", ")
                        ));
                    }
                }
                if obj.role == Role::Metric {
                    let users: Vec<&str> = self
                        .tensors
                        .values()
                        .filter(|t| t.metric_id.as_deref() == Some(id))
                        .map(|t| t.id.as_str())
                        .collect();
                    if !users.is_empty() {
                        out.push_str(&format!("Tensors Using This Metric: {}\n", users.join(", ")));
                    }
                }
                Ok(out)
            }
            None => {
                let mut out = String::new();
                out.push_str(&format!("Total tensors created: {}\n", self.tensors.len()));
                let coords: Vec<&str> = self
                    .tensors
                    .values()
                    .filter(|t| t.role == Role::Coordinates)
                    .map(|t| t.id.as_str())
                    .collect();
                out.push_str("Coordinate Systems:\n");
                for (i, c) in coords.iter().enumerate() {
                    out.push_str(&format!("  {}. {c}\n", i + 1));
                }
                out.push_str("Metrics:\n");
                let metrics: Vec<&TensorObject> = self
                    .tensors
                    .values()
                    .filter(|t| t.role == Role::Metric)
                    .collect();
                for (i, m) in metrics.iter().enumerate() {
                    let users: Vec<&str> = self
                        .tensors
                        .values()
                        .filter(|t| t.metric_id.as_deref() == Some(m.id.as_str()))
                        .map(|t| t.id.as_str())
                        .collect();
                    out.push_str(&format!("  {}. {} -> {}\n", i + 1, m.id, users.join(" | ")));
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn syms(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn diag(entries: &[&str]) -> Vec<Vec<Expr>> {
        let n = entries.len();
        let mut m = vec![vec![Expr::int(0); n]; n];
        for (i, e) in entries.iter().enumerate() {
            m[i][i] = parse_expr(e).unwrap();
        }
        m
    }

    #[test]
    fn coordinates_store_their_symbols() {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        assert_eq!(s.dimension("Cartesian").unwrap(), 4);
        assert_eq!(
            s.coord_symbols("Cartesian").unwrap(),
            vec!["t", "x", "y", "z"]
        );
        assert_eq!(s.options.reserved_symbols, syms(&["t", "x", "y", "z"]));
        // one-dimensional degenerate system
        s.new_coordinates("C1", &syms(&["u"])).unwrap();
        assert_eq!(s.dimension("C1").unwrap(), 1);
    }

    #[test]
    fn metric_validation() {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        s.new_metric("Minkowski", "Cartesian", diag(&["-1", "1", "1", "1"]), Some("η"))
            .unwrap();
        assert!(matches!(
            s.new_metric("Bad", "Cartesian", diag(&["0", "1", "1", "1"]), None),
            Err(Error::Singular)
        ));
        let mut asym = diag(&["-1", "1", "1", "1"]);
        asym[0][1] = Expr::int(1);
        assert!(matches!(
            s.new_metric("Asym", "Cartesian", asym, None),
            Err(Error::NotSymmetric)
        ));
        assert!(matches!(
            s.new_metric("M2", "Nowhere", diag(&["1"]), None),
            Err(Error::UnknownCoords(_))
        ));
    }

    #[test]
    fn duplicate_ids_respect_overwrite_policy() {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        s.new_metric("Minkowski", "Cartesian", diag(&["-1", "1", "1", "1"]), None)
            .unwrap();
        let err = s.new_metric("Minkowski", "Cartesian", diag(&["-1", "1", "1", "1"]), None);
        assert!(matches!(err, Err(Error::DuplicateId(_))));
        s.set_allow_overwrite(true);
        s.new_metric("Minkowski", "Cartesian", diag(&["-1", "1", "1", "1"]), None)
            .unwrap();
    }

    #[test]
    fn delete_protects_references() {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        s.new_metric("Minkowski", "Cartesian", diag(&["-1", "1", "1", "1"]), None)
            .unwrap();
        s.new_tensor(
            "PerfectFluid",
            "Minkowski",
            Some("Cartesian"),
            vec![1, 1],
            diag(&["ρ", "p", "p", "p"]).into_iter().flatten().collect(),
            Some("T"),
        )
        .unwrap();
        assert!(matches!(
            s.delete("Cartesian"),
            Err(Error::InUseAsCoords { .. })
        ));
        assert!(matches!(
            s.delete("Minkowski"),
            Err(Error::InUseAsMetric { .. })
        ));
        s.delete("PerfectFluid").unwrap();
        s.delete("Minkowski").unwrap();
        s.delete("Cartesian").unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn change_id_rewrites_references() {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        s.new_metric("Minkowski", "Cartesian", diag(&["-1", "1", "1", "1"]), None)
            .unwrap();
        s.new_tensor(
            "FourVelocity",
            "Minkowski",
            Some("Cartesian"),
            vec![1],
            vec![Expr::int(1), Expr::sym("v"), Expr::int(0), Expr::int(0)],
            None,
        )
        .unwrap();
        s.change_id("FourVelocity", "4-Velocity").unwrap();
        assert!(matches!(s.get("FourVelocity"), Err(Error::UnknownId(_))));
        assert!(s.exists("4-Velocity"));
        s.change_id("Cartesian", "Cart").unwrap();
        assert_eq!(s.get("Minkowski").unwrap().default_coords, "Cart");
        assert_eq!(s.get("4-Velocity").unwrap().default_coords, "Cart");
        assert!(s
            .get("4-Velocity")
            .unwrap()
            .components
            .contains_key(&(vec![1], "Cart".to_string())));
    }

    #[test]
    fn default_changes_validate_role_and_rank() {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        s.new_metric("Minkowski", "Cartesian", diag(&["-1", "1", "1", "1"]), None)
            .unwrap();
        s.new_tensor(
            "T",
            "Minkowski",
            None,
            vec![1, 1],
            diag(&["ρ", "p", "p", "p"]).into_iter().flatten().collect(),
            None,
        )
        .unwrap();
        assert!(matches!(
            s.change_default_indices("T", vec![1]),
            Err(Error::RankMismatch { .. })
        ));
        assert!(matches!(
            s.change_default_indices("Minkowski", vec![1, 1]),
            Err(Error::RoleForbidden(_))
        ));
        assert!(matches!(
            s.change_default_coords("Cartesian", "Cartesian"),
            Err(Error::RoleForbidden(_))
        ));
        s.change_default_indices("T", vec![-1, -1]).unwrap();
        assert_eq!(s.get("T").unwrap().default_indices, vec![-1, -1]);
    }

    #[test]
    fn index_letters_reset_to_default() {
        let mut s = Session::new();
        s.set_index_letters(Some("abcdef"));
        assert_eq!(s.options.index_letters[0], 'a');
        let current = s.set_index_letters(None);
        assert_eq!(current, DEFAULT_INDEX_LETTERS);
    }

    #[test]
    fn reserved_symbols_accumulate() {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        s.new_coordinates("Spherical", &syms(&["t", "r", "θ", "φ"])).unwrap();
        let now = s.set_reserved_symbols(&syms(&["M"]));
        assert_eq!(now, syms(&["t", "x", "y", "z", "r", "θ", "φ", "M"]));
    }
}
