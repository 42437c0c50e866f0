//! Python bindings: a `Session` class exposing the tensor registry, the
//! curvature and geodesic pipelines, and the formula engine. Expressions
//! cross the boundary as strings in the engine's expression grammar.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyList;
use tensorium::display::PostOp;
use tensorium::expr::{format_expr, parse_expr, DisplayOpts, Expr, Style};
use tensorium::session::IndexConfig;
use tensorium::{Error, Predicate, Relation};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse(text: &str) -> PyResult<Expr> {
    parse_expr(text).map_err(to_py_err)
}

/// Nested Python lists of strings/ints to a flat component array of the
/// given rank and dimension.
fn extract_components(obj: &Bound<'_, PyAny>, rank: usize, dim: usize) -> PyResult<Vec<Expr>> {
    fn entry(obj: &Bound<'_, PyAny>) -> PyResult<Expr> {
        if let Ok(s) = obj.extract::<String>() {
            return parse(&s);
        }
        if let Ok(i) = obj.extract::<i64>() {
            return Ok(Expr::int(i));
        }
        Err(PyValueError::new_err(
            "components must be strings or integers",
        ))
    }
    fn walk(obj: &Bound<'_, PyAny>, rank: usize, dim: usize, out: &mut Vec<Expr>) -> PyResult<()> {
        if rank == 0 {
            out.push(entry(obj)?);
            return Ok(());
        }
        let list = obj.cast::<PyList>().map_err(|_| {
            PyValueError::new_err(format!("expected {rank} level(s) of list nesting"))
        })?;
        if list.len() != dim {
            return Err(PyValueError::new_err(format!(
                "expected {dim} entries per axis, got {}",
                list.len()
            )));
        }
        for item in list.iter() {
            walk(&item, rank - 1, dim, out)?;
        }
        Ok(())
    }
    let mut out = Vec::new();
    if rank == 0 {
        // scalars: a bare entry or a one-element list
        if let Ok(list) = obj.cast::<PyList>() {
            if list.len() == 1 {
                out.push(entry(&list.get_item(0)?)?);
                return Ok(out);
            }
        }
        out.push(entry(obj)?);
        return Ok(out);
    }
    walk(obj, rank, dim, &mut out)?;
    Ok(out)
}

fn style_of(latex: bool) -> Style {
    if latex {
        Style::Latex
    } else {
        Style::Plain
    }
}

/// A tensor calculus session: coordinate systems, metrics, tensors, and the
/// operations that combine them.
#[pyclass]
struct Session {
    inner: tensorium::Session,
}

#[pymethods]
impl Session {
    #[new]
    fn new() -> Session {
        Session {
            inner: tensorium::Session::new(),
        }
    }

    /// Define a coordinate system from its symbols.
    fn new_coordinates(&mut self, id: &str, symbols: Vec<String>) -> PyResult<String> {
        self.inner.new_coordinates(id, &symbols).map_err(to_py_err)
    }

    /// Define a metric from its matrix with two lower indices.
    #[pyo3(signature = (id, coords, components, symbol=None))]
    fn new_metric(
        &mut self,
        id: &str,
        coords: &str,
        components: &Bound<'_, PyAny>,
        symbol: Option<&str>,
    ) -> PyResult<String> {
        let dim = self.inner.dimension(coords).map_err(to_py_err)?;
        let flat = extract_components(components, 2, dim)?;
        let matrix: Vec<Vec<Expr>> = (0..dim)
            .map(|i| flat[i * dim..(i + 1) * dim].to_vec())
            .collect();
        self.inner
            .new_metric(id, coords, matrix, symbol)
            .map_err(to_py_err)
    }

    /// Define a tensor in a manifold; `indices` is a list of +1/-1.
    #[pyo3(signature = (id, metric, indices, components, coords=None, symbol=None))]
    fn new_tensor(
        &mut self,
        id: &str,
        metric: &str,
        indices: Vec<i8>,
        components: &Bound<'_, PyAny>,
        coords: Option<&str>,
        symbol: Option<&str>,
    ) -> PyResult<String> {
        let coords_id = match coords {
            Some(c) => c.to_string(),
            None => self
                .inner
                .get(metric)
                .map_err(to_py_err)?
                .default_coords
                .clone(),
        };
        let dim = self.inner.dimension(&coords_id).map_err(to_py_err)?;
        let flat = extract_components(components, indices.len(), dim)?;
        self.inner
            .new_tensor(id, metric, Some(&coords_id), indices, flat, symbol)
            .map_err(to_py_err)
    }

    /// Add a coordinate transformation edge; rules map source symbols to
    /// expressions in the target symbols.
    fn add_coord_transformation(
        &mut self,
        source: &str,
        target: &str,
        rules: std::collections::HashMap<String, String>,
    ) -> PyResult<()> {
        let mut parsed = Vec::new();
        // apply in the source symbol order for deterministic Jacobians
        let symbols = self.inner.coord_symbols(source).map_err(to_py_err)?;
        for sym in symbols {
            if let Some(text) = rules.get(&sym) {
                parsed.push((sym.clone(), parse(text)?));
            }
        }
        self.inner
            .add_coord_transformation(source, target, parsed)
            .map_err(to_py_err)
    }

    /// Evaluate a tensor formula, e.g. `"A"["μν"] + "B"["μν"]`.
    #[pyo3(signature = (formula, symbol=None))]
    fn calc(&mut self, formula: &str, symbol: Option<&str>) -> PyResult<String> {
        self.inner.calc(formula, symbol).map_err(to_py_err)
    }

    fn christoffel(&mut self, metric: &str) -> PyResult<String> {
        self.inner.calc_christoffel(metric).map_err(to_py_err)
    }

    fn riemann(&mut self, metric: &str) -> PyResult<String> {
        self.inner.calc_riemann(metric).map_err(to_py_err)
    }

    fn ricci_tensor(&mut self, metric: &str) -> PyResult<String> {
        self.inner.calc_ricci_tensor(metric).map_err(to_py_err)
    }

    fn ricci_scalar(&mut self, metric: &str) -> PyResult<String> {
        self.inner.calc_ricci_scalar(metric).map_err(to_py_err)
    }

    fn einstein(&mut self, metric: &str) -> PyResult<String> {
        self.inner.calc_einstein(metric).map_err(to_py_err)
    }

    #[pyo3(signature = (metric, coords=None))]
    fn lagrangian(&mut self, metric: &str, coords: Option<&str>) -> PyResult<String> {
        self.inner.calc_lagrangian(metric, coords).map_err(to_py_err)
    }

    #[pyo3(signature = (metric, coords=None))]
    fn geodesic_from_lagrangian(&mut self, metric: &str, coords: Option<&str>) -> PyResult<String> {
        self.inner
            .calc_geodesic_from_lagrangian(metric, coords)
            .map_err(to_py_err)
    }

    #[pyo3(signature = (metric, coords=None))]
    fn geodesic_from_christoffel(
        &mut self,
        metric: &str,
        coords: Option<&str>,
    ) -> PyResult<String> {
        self.inner
            .calc_geodesic_from_christoffel(metric, coords)
            .map_err(to_py_err)
    }

    /// Render a tensor in matrix form.
    #[pyo3(signature = (id, indices=None, coords=None, latex=false))]
    fn show(
        &mut self,
        id: &str,
        indices: Option<IndexConfig>,
        coords: Option<&str>,
        latex: bool,
    ) -> PyResult<String> {
        self.inner
            .show(id, indices.as_ref(), coords, &[], style_of(latex))
            .map_err(to_py_err)
    }

    /// List the unique nonzero components up to sign.
    #[pyo3(signature = (id, indices=None, coords=None, latex=false, activate=false))]
    fn list(
        &mut self,
        id: &str,
        indices: Option<IndexConfig>,
        coords: Option<&str>,
        latex: bool,
        activate: bool,
    ) -> PyResult<String> {
        let post = if activate {
            vec![PostOp::Activate]
        } else {
            Vec::new()
        };
        self.inner
            .list_components(id, indices.as_ref(), coords, &post, style_of(latex))
            .map_err(to_py_err)
    }

    /// Components as a flat list of expression strings.
    #[pyo3(signature = (id, indices=None, coords=None))]
    fn get_components(
        &mut self,
        id: &str,
        indices: Option<IndexConfig>,
        coords: Option<&str>,
    ) -> PyResult<Vec<String>> {
        let out = self
            .inner
            .get_components(id, indices.as_ref(), coords)
            .map_err(to_py_err)?;
        let opts = DisplayOpts::default();
        Ok(out
            .components
            .iter()
            .map(|c| format_expr(c, Style::Plain, &opts))
            .collect())
    }

    #[pyo3(signature = (metric, coords=None, latex=false))]
    fn line_element(&mut self, metric: &str, coords: Option<&str>, latex: bool) -> PyResult<String> {
        let e = self.inner.line_element(metric, coords).map_err(to_py_err)?;
        Ok(format_expr(&e, style_of(latex), &self.inner.display_opts()))
    }

    #[pyo3(signature = (metric, coords=None, latex=false))]
    fn volume_element_squared(
        &mut self,
        metric: &str,
        coords: Option<&str>,
        latex: bool,
    ) -> PyResult<String> {
        let e = self
            .inner
            .volume_element_squared(metric, coords)
            .map_err(to_py_err)?;
        Ok(format_expr(&e, style_of(latex), &self.inner.display_opts()))
    }

    #[pyo3(signature = (id=None))]
    fn info(&self, id: Option<&str>) -> PyResult<String> {
        self.inner.info(id).map_err(to_py_err)
    }

    /// Add a simplification assumption like "r >= 0".
    fn add_assumption(&mut self, text: &str) -> PyResult<()> {
        let text = text.trim();
        for (op, relation) in [
            (">=", Relation::Geq),
            ("<=", Relation::Leq),
            ("==", Relation::EqConst),
            (">", Relation::Gt),
            ("<", Relation::Lt),
        ] {
            if let Some((lhs, rhs)) = text.split_once(op) {
                self.inner.add_assumption(Predicate {
                    symbol: lhs.trim().to_string(),
                    relation,
                    bound: parse(rhs.trim())?,
                });
                return Ok(());
            }
        }
        Err(PyValueError::new_err(format!("bad assumption \"{text}\"")))
    }

    fn clear_assumptions(&mut self) {
        self.inner.clear_assumptions();
    }

    fn set_assume_real(&mut self, on: bool) {
        self.inner.set_assume_real(on);
    }

    fn set_reserved_symbols(&mut self, symbols: Vec<String>) -> Vec<String> {
        self.inner.set_reserved_symbols(&symbols)
    }

    #[pyo3(signature = (letters=None))]
    fn set_index_letters(&mut self, letters: Option<&str>) -> String {
        self.inner.set_index_letters(letters)
    }

    fn set_allow_overwrite(&mut self, on: bool) {
        self.inner.set_allow_overwrite(on);
    }

    /// Toggle parallel simplification; returns the worker count in use.
    fn set_parallelization(&mut self, on: bool) -> usize {
        self.inner.set_parallelization(on)
    }

    fn set_workers(&mut self, workers: usize) {
        self.inner.set_workers(workers);
    }

    #[pyo3(signature = (parameter=None))]
    fn set_curve_parameter(&mut self, parameter: Option<&str>) -> PyResult<String> {
        self.inner.set_curve_parameter(parameter).map_err(to_py_err)
    }

    fn simplify_tensor(&mut self, id: &str) -> PyResult<String> {
        self.inner.simplify_tensor(id).map_err(to_py_err)
    }

    fn activate(&mut self, id: &str) -> PyResult<String> {
        self.inner.activate_tensor(id).map_err(to_py_err)
    }

    fn delete(&mut self, id: &str) -> PyResult<()> {
        self.inner.delete(id).map_err(to_py_err)
    }

    fn change_id(&mut self, old: &str, new: &str) -> PyResult<String> {
        self.inner.change_id(old, new).map_err(to_py_err)
    }

    fn change_symbol(&mut self, id: &str, symbol: &str) -> PyResult<String> {
        self.inner.change_symbol(id, symbol).map_err(to_py_err)
    }

    fn change_default_indices(&mut self, id: &str, indices: IndexConfig) -> PyResult<String> {
        self.inner
            .change_default_indices(id, indices)
            .map_err(to_py_err)
    }

    fn change_default_coords(&mut self, id: &str, coords: &str) -> PyResult<String> {
        self.inner
            .change_default_coords(id, coords)
            .map_err(to_py_err)
    }

    /// The whole session as a JSON string.
    fn export_all(&self) -> String {
        serde_json::to_string_pretty(&self.inner.export_all()).expect("serializable")
    }

    fn import_all(&mut self, json: &str) -> PyResult<()> {
        let value: serde_json::Value =
            serde_json::from_str(json).map_err(|e| PyValueError::new_err(e.to_string()))?;
        self.inner.import_all(&value).map_err(to_py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.export_all_to_file(path).map_err(to_py_err)
    }

    fn load(&mut self, path: &str) -> PyResult<()> {
        self.inner.import_all_from_file(path).map_err(to_py_err)
    }

    fn ids(&self) -> Vec<String> {
        self.inner.ids().cloned().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Session({} tensors)", self.inner.len())
    }
}

/// Simplify an expression string to canonical form.
#[pyfunction]
#[pyo3(signature = (text, assume_real=true))]
fn simplify(text: &str, assume_real: bool) -> PyResult<String> {
    let e = parse(text)?;
    let mut asm = tensorium::Assumptions::default();
    asm.assume_real = assume_real;
    let s = tensorium::expr::simplify(&e, &asm);
    Ok(format_expr(&s, Style::Plain, &DisplayOpts::default()))
}

/// Differentiate an expression string with respect to a symbol.
#[pyfunction]
fn diff(text: &str, symbol: &str) -> PyResult<String> {
    let e = parse(text)?;
    let d = tensorium::expr::diff(&e, symbol);
    let s = tensorium::expr::simplify(&d, &tensorium::Assumptions::default());
    Ok(format_expr(&s, Style::Plain, &DisplayOpts::default()))
}

/// Probabilistic zero test under the default assumptions.
#[pyfunction]
fn is_zero(text: &str) -> PyResult<bool> {
    let e = parse(text)?;
    tensorium::expr::is_zero(&e, &tensorium::Assumptions::default()).map_err(to_py_err)
}

#[pymodule]
fn pytensorium(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(simplify, m)?)?;
    m.add_function(wrap_pyfunction!(diff, m)?)?;
    m.add_function(wrap_pyfunction!(is_zero, m)?)?;
    Ok(())
}
