//! Session persistence: a UTF-8 JSON schema with one entry per tensor ID
//! plus a reserved "$options" record. Expressions are serialized as canonical
//! nested arrays `["kind", payload, children...]`. Files use the
//! `.ogre.json` extension.

use crate::error::{Error, Result};
use crate::expr::{
    Assumptions, Expr, Predicate, Relation, Replacement, ReplaceTarget, SubRule,
};
use crate::session::{
    CoordData, IndexConfig, JacobianSet, Role, Session, SessionOptions, TensorObject,
    FORMAT_VERSION,
};
use indexmap::IndexMap;
use num_bigint::BigInt;
use num_rational::BigRational;

use serde_json::{json, Map, Value};
use std::path::Path;

pub const SESSION_FILE_EXTENSION: &str = ".ogre.json";

const OPTIONS_KEY: &str = "$options";

// ---------------------------------------------------------------------------
// expression encoding

pub fn expr_to_json(e: &Expr) -> Value {
    match e {
        Expr::Num(n) => {
            if n.is_integer() {
                json!(["int", n.numer().to_string()])
            } else {
                json!(["rat", n.numer().to_string(), n.denom().to_string()])
            }
        }
        Expr::Sym(s) => json!(["sym", s]),
        Expr::Sum(c) => {
            let mut arr = vec![json!("sum")];
            arr.extend(c.iter().map(expr_to_json));
            Value::Array(arr)
        }
        Expr::Prod(c) => {
            let mut arr = vec![json!("prod")];
            arr.extend(c.iter().map(expr_to_json));
            Value::Array(arr)
        }
        Expr::Pow(b, ex) => json!(["pow", expr_to_json(b), expr_to_json(ex)]),
        Expr::Func(name, args) => {
            let mut arr = vec![json!("fn"), json!(name)];
            arr.extend(args.iter().map(expr_to_json));
            Value::Array(arr)
        }
        Expr::Deriv { head, args, orders } => json!([
            "deriv",
            head,
            args.iter().map(expr_to_json).collect::<Vec<_>>(),
            orders
        ]),
        Expr::Deferred {
            inner,
            param,
            order,
        } => json!(["dd", expr_to_json(inner), param, order]),
        Expr::Abs(inner) => json!(["abs", expr_to_json(inner)]),
    }
}

pub fn expr_from_json(v: &Value) -> Result<Expr> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Schema(format!("expected expression array, got {v}")))?;
    let kind = arr
        .first()
        .and_then(|k| k.as_str())
        .ok_or_else(|| Error::Schema("expression array lacks a kind tag".into()))?;
    let at = |i: usize| -> Result<&Value> {
        arr.get(i)
            .ok_or_else(|| Error::Schema(format!("truncated \"{kind}\" expression array")))
    };
    let bigint = |v: &Value| -> Result<BigInt> {
        v.as_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Schema(format!("bad integer payload {v}")))
    };
    match kind {
        "int" => Ok(Expr::Num(BigRational::from_integer(bigint(at(1)?)?))),
        "rat" => {
            let den = bigint(at(2)?)?;
            if den == BigInt::from(0) {
                return Err(Error::Schema("zero denominator in rational".into()));
            }
            Ok(Expr::Num(BigRational::new(bigint(at(1)?)?, den)))
        }
        "sym" => Ok(Expr::Sym(
            at(1)?
                .as_str()
                .ok_or_else(|| Error::Schema("bad symbol payload".into()))?
                .to_string(),
        )),
        "sum" => Ok(Expr::sum(
            arr[1..].iter().map(expr_from_json).collect::<Result<_>>()?,
        )),
        "prod" => Ok(Expr::prod(
            arr[1..].iter().map(expr_from_json).collect::<Result<_>>()?,
        )),
        "pow" => Ok(Expr::pow(expr_from_json(at(1)?)?, expr_from_json(at(2)?)?)),
        "fn" => {
            let name = at(1)?
                .as_str()
                .ok_or_else(|| Error::Schema("bad function head".into()))?;
            Ok(Expr::Func(
                name.to_string(),
                arr[2..].iter().map(expr_from_json).collect::<Result<_>>()?,
            ))
        }
        "deriv" => {
            let head = at(1)?
                .as_str()
                .ok_or_else(|| Error::Schema("bad derivative head".into()))?;
            let args: Vec<Expr> = at(2)?
                .as_array()
                .ok_or_else(|| Error::Schema("bad derivative args".into()))?
                .iter()
                .map(expr_from_json)
                .collect::<Result<_>>()?;
            let orders: Vec<u32> = at(3)?
                .as_array()
                .ok_or_else(|| Error::Schema("bad derivative orders".into()))?
                .iter()
                .map(|o| {
                    o.as_u64()
                        .map(|k| k as u32)
                        .ok_or_else(|| Error::Schema("bad derivative order".into()))
                })
                .collect::<Result<_>>()?;
            if args.is_empty() || args.len() != orders.len() {
                return Err(Error::Schema("derivative arity mismatch".into()));
            }
            Ok(Expr::Deriv {
                head: head.to_string(),
                args,
                orders,
            })
        }
        "dd" => Ok(Expr::Deferred {
            inner: Box::new(expr_from_json(at(1)?)?),
            param: at(2)?
                .as_str()
                .ok_or_else(|| Error::Schema("bad deferred parameter".into()))?
                .to_string(),
            order: at(3)?
                .as_u64()
                .filter(|k| *k > 0)
                .ok_or_else(|| Error::Schema("bad deferred order".into()))? as u32,
        }),
        "abs" => Ok(Expr::abs(expr_from_json(at(1)?)?)),
        other => Err(Error::Schema(format!("unknown expression kind \"{other}\""))),
    }
}

fn expr_matrix_to_json(m: &[Vec<Expr>]) -> Value {
    Value::Array(
        m.iter()
            .map(|row| Value::Array(row.iter().map(expr_to_json).collect()))
            .collect(),
    )
}

fn expr_matrix_from_json(v: &Value) -> Result<Vec<Vec<Expr>>> {
    v.as_array()
        .ok_or_else(|| Error::Schema("expected a matrix".into()))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| Error::Schema("expected a matrix row".into()))?
                .iter()
                .map(expr_from_json)
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// tensor objects

fn rep_key_to_string(indices: &IndexConfig, coords: &str) -> String {
    serde_json::to_string(&json!([indices, coords])).expect("key encoding")
}

fn rep_key_from_string(s: &str) -> Result<(IndexConfig, String)> {
    let v: Value =
        serde_json::from_str(s).map_err(|e| Error::Schema(format!("bad components key: {e}")))?;
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Schema(format!("bad components key \"{s}\"")))?;
    let indices = arr[0]
        .as_array()
        .ok_or_else(|| Error::Schema("bad index configuration".into()))?
        .iter()
        .map(|x| {
            x.as_i64()
                .filter(|k| *k == 1 || *k == -1)
                .map(|k| k as i8)
                .ok_or_else(|| Error::Schema("index positions must be ±1".into()))
        })
        .collect::<Result<_>>()?;
    let coords = arr[1]
        .as_str()
        .ok_or_else(|| Error::Schema("bad coordinate key".into()))?
        .to_string();
    Ok((indices, coords))
}

fn tensor_to_json(obj: &TensorObject) -> Value {
    let mut map = Map::new();
    let mut components = Map::new();
    for ((indices, coords), comps) in &obj.components {
        components.insert(
            rep_key_to_string(indices, coords),
            Value::Array(comps.iter().map(expr_to_json).collect()),
        );
    }
    map.insert("Components".into(), Value::Object(components));
    map.insert("DefaultCoords".into(), json!(obj.default_coords));
    map.insert("DefaultIndices".into(), json!(obj.default_indices));
    if let Some(m) = &obj.metric_id {
        map.insert("Metric".into(), json!(m));
    }
    map.insert("Role".into(), json!(obj.role.as_str()));
    map.insert("Symbol".into(), json!(obj.symbol));
    if let Some(cd) = &obj.coord_data {
        if !cd.transformations.is_empty() {
            let mut transformations = Map::new();
            for (target, rules) in &cd.transformations {
                let mut rule_map = Map::new();
                for rule in rules {
                    if let (ReplaceTarget::Symbol(name), Replacement::Expr(e)) =
                        (&rule.target, &rule.replacement)
                    {
                        rule_map.insert(name.clone(), expr_to_json(e));
                    }
                }
                transformations.insert(target.clone(), Value::Object(rule_map));
            }
            map.insert("CoordTransformations".into(), Value::Object(transformations));
            let mut jacobians = Map::new();
            for (target, jac) in &cd.jacobians {
                jacobians.insert(
                    target.clone(),
                    json!({
                        "Jacobian": expr_matrix_to_json(&jac.j),
                        "InverseJacobian": expr_matrix_to_json(&jac.jinv),
                        "ChristoffelJacobian": Value::Array(
                            jac.d2.iter().map(|m| expr_matrix_to_json(m)).collect()
                        ),
                    }),
                );
            }
            map.insert("Jacobians".into(), Value::Object(jacobians));
        }
    }
    map.insert("FormatVersion".into(), json!(FORMAT_VERSION));
    Value::Object(map)
}

fn tensor_from_json(id: &str, v: &Value) -> Result<TensorObject> {
    let map = v
        .as_object()
        .ok_or_else(|| Error::Schema(format!("tensor \"{id}\" is not an object")))?;
    check_version(map.get("FormatVersion"))?;
    let role_str = map
        .get("Role")
        .and_then(|r| r.as_str())
        .ok_or_else(|| Error::Schema(format!("tensor \"{id}\" lacks a role")))?;
    let role = Role::from_str(role_str)
        .ok_or_else(|| Error::Schema(format!("unknown role \"{role_str}\"")))?;
    let symbol = map
        .get("Symbol")
        .and_then(|s| s.as_str())
        .unwrap_or(crate::session::PLACEHOLDER_SYMBOL)
        .to_string();
    let default_coords = map
        .get("DefaultCoords")
        .and_then(|s| s.as_str())
        .ok_or_else(|| Error::Schema(format!("tensor \"{id}\" lacks default coordinates")))?
        .to_string();
    let default_indices: IndexConfig = map
        .get("DefaultIndices")
        .and_then(|a| a.as_array())
        .ok_or_else(|| Error::Schema(format!("tensor \"{id}\" lacks default indices")))?
        .iter()
        .map(|x| {
            x.as_i64()
                .filter(|k| *k == 1 || *k == -1)
                .map(|k| k as i8)
                .ok_or_else(|| Error::Schema("index positions must be ±1".into()))
        })
        .collect::<Result<_>>()?;
    let metric_id = map
        .get("Metric")
        .and_then(|m| m.as_str())
        .map(|s| s.to_string());
    let mut components = IndexMap::new();
    if let Some(obj) = map.get("Components").and_then(|c| c.as_object()) {
        for (key, comps) in obj {
            let rep_key = rep_key_from_string(key)?;
            let comps = comps
                .as_array()
                .ok_or_else(|| Error::Schema("components must be an array".into()))?
                .iter()
                .map(expr_from_json)
                .collect::<Result<_>>()?;
            components.insert(rep_key, comps);
        }
    }
    let coord_data = if role == Role::Coordinates {
        let mut cd = CoordData::default();
        if let Some(trans) = map.get("CoordTransformations").and_then(|c| c.as_object()) {
            for (target, rules) in trans {
                let rule_map = rules
                    .as_object()
                    .ok_or_else(|| Error::Schema("bad transformation rules".into()))?;
                let mut list = Vec::new();
                for (name, e) in rule_map {
                    list.push(SubRule::symbol(name.clone(), expr_from_json(e)?));
                }
                cd.transformations.insert(target.clone(), list);
            }
        }
        if let Some(jacs) = map.get("Jacobians").and_then(|c| c.as_object()) {
            for (target, j) in jacs {
                let jm = j
                    .as_object()
                    .ok_or_else(|| Error::Schema("bad Jacobian record".into()))?;
                let jac = JacobianSet {
                    j: expr_matrix_from_json(
                        jm.get("Jacobian")
                            .ok_or_else(|| Error::Schema("missing Jacobian".into()))?,
                    )?,
                    jinv: expr_matrix_from_json(
                        jm.get("InverseJacobian")
                            .ok_or_else(|| Error::Schema("missing InverseJacobian".into()))?,
                    )?,
                    d2: jm
                        .get("ChristoffelJacobian")
                        .and_then(|v| v.as_array())
                        .ok_or_else(|| Error::Schema("missing ChristoffelJacobian".into()))?
                        .iter()
                        .map(expr_matrix_from_json)
                        .collect::<Result<_>>()?,
                };
                cd.jacobians.insert(target.clone(), jac);
            }
        }
        Some(cd)
    } else {
        None
    };
    Ok(TensorObject {
        id: id.to_string(),
        role,
        symbol,
        metric_id,
        default_indices,
        default_coords,
        components,
        coord_data,
    })
}

// ---------------------------------------------------------------------------
// options

fn relation_str(r: &Relation) -> &'static str {
    match r {
        Relation::Geq => ">=",
        Relation::Gt => ">",
        Relation::Leq => "<=",
        Relation::Lt => "<",
        Relation::EqConst => "==",
    }
}

fn relation_from_str(s: &str) -> Result<Relation> {
    Ok(match s {
        ">=" => Relation::Geq,
        ">" => Relation::Gt,
        "<=" => Relation::Leq,
        "<" => Relation::Lt,
        "==" => Relation::EqConst,
        other => return Err(Error::Schema(format!("unknown relation \"{other}\""))),
    })
}

fn options_to_json(o: &SessionOptions) -> Value {
    json!({
        "FormatVersion": FORMAT_VERSION,
        "CurveParameter": o.curve_parameter,
        "IndexLetters": o.index_letters.iter().collect::<String>(),
        "AllowOverwrite": o.allow_overwrite,
        "Parallelize": o.parallelize,
        "ReservedSymbols": o.reserved_symbols,
        "SimplifyAssumptions": {
            "AssumeReal": o.assumptions.assume_real,
            "User": o.assumptions.predicates.iter().map(|p| json!({
                "symbol": p.symbol,
                "relation": relation_str(&p.relation),
                "bound": expr_to_json(&p.bound),
            })).collect::<Vec<_>>(),
        },
    })
}

fn options_from_json(v: &Value) -> Result<SessionOptions> {
    let map = v
        .as_object()
        .ok_or_else(|| Error::Schema("options record is not an object".into()))?;
    check_version(map.get("FormatVersion"))?;
    let mut options = SessionOptions::default();
    if let Some(p) = map.get("CurveParameter").and_then(|s| s.as_str()) {
        options.curve_parameter = p.to_string();
    }
    if let Some(l) = map.get("IndexLetters").and_then(|s| s.as_str()) {
        options.index_letters = l.chars().collect();
    }
    if let Some(b) = map.get("AllowOverwrite").and_then(|b| b.as_bool()) {
        options.allow_overwrite = b;
    }
    if let Some(b) = map.get("Parallelize").and_then(|b| b.as_bool()) {
        options.parallelize = b;
    }
    if let Some(r) = map.get("ReservedSymbols").and_then(|r| r.as_array()) {
        options.reserved_symbols = r
            .iter()
            .map(|s| {
                s.as_str()
                    .map(|x| x.to_string())
                    .ok_or_else(|| Error::Schema("reserved symbols must be strings".into()))
            })
            .collect::<Result<_>>()?;
    }
    if let Some(sa) = map.get("SimplifyAssumptions").and_then(|s| s.as_object()) {
        let mut assumptions = Assumptions {
            assume_real: sa
                .get("AssumeReal")
                .and_then(|b| b.as_bool())
                .unwrap_or(true),
            predicates: Vec::new(),
        };
        if let Some(user) = sa.get("User").and_then(|u| u.as_array()) {
            for p in user {
                let po = p
                    .as_object()
                    .ok_or_else(|| Error::Schema("bad assumption record".into()))?;
                assumptions.predicates.push(Predicate {
                    symbol: po
                        .get("symbol")
                        .and_then(|s| s.as_str())
                        .ok_or_else(|| Error::Schema("assumption lacks a symbol".into()))?
                        .to_string(),
                    relation: relation_from_str(
                        po.get("relation")
                            .and_then(|s| s.as_str())
                            .ok_or_else(|| Error::Schema("assumption lacks a relation".into()))?,
                    )?,
                    bound: expr_from_json(
                        po.get("bound")
                            .ok_or_else(|| Error::Schema("assumption lacks a bound".into()))?,
                    )?,
                });
            }
        }
        options.assumptions = assumptions;
    }
    Ok(options)
}

fn check_version(v: Option<&Value>) -> Result<()> {
    let Some(s) = v.and_then(|x| x.as_str()) else {
        return Ok(()); // tolerate missing version tags
    };
    let major = s.split('.').next().unwrap_or("");
    let ours = FORMAT_VERSION.split('.').next().unwrap_or("");
    if major != ours {
        return Err(Error::VersionUnsupported(s.to_string()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// session API

impl Session {
    /// Export one tensor as a single-entry fragment. The fragment contains
    /// exactly the representations cached so far.
    pub fn export_tensor(&self, id: &str) -> Result<Value> {
        let obj = self.get(id)?;
        let mut map = Map::new();
        map.insert(id.to_string(), tensor_to_json(obj));
        Ok(Value::Object(map))
    }

    /// Export the whole session, including the options record.
    pub fn export_all(&self) -> Value {
        let mut map = Map::new();
        map.insert(OPTIONS_KEY.to_string(), options_to_json(&self.options));
        for (id, obj) in &self.tensors {
            map.insert(id.clone(), tensor_to_json(obj));
        }
        Value::Object(map)
    }

    /// Export the whole session to a file.
    pub fn export_all_to_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.export_all())
            .map_err(|e| Error::Schema(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Import one exported fragment; its references must already resolve.
    pub fn import_tensor(&mut self, fragment: &Value) -> Result<String> {
        let map = fragment
            .as_object()
            .ok_or_else(|| Error::Schema("fragment is not an object".into()))?;
        if map.len() != 1 {
            return Err(Error::Schema(
                "fragment must contain exactly one tensor".into(),
            ));
        }
        let (id, body) = map.iter().next().unwrap();
        if id == OPTIONS_KEY {
            return Err(Error::Schema("fragment may not be an options record".into()));
        }
        let obj = tensor_from_json(id, body)?;
        if let Some(metric) = &obj.metric_id {
            if !self.exists(metric) {
                return Err(Error::DanglingReference {
                    id: id.clone(),
                    target: metric.clone(),
                });
            }
        }
        if obj.role != Role::Coordinates && !self.exists(&obj.default_coords) {
            return Err(Error::DanglingReference {
                id: id.clone(),
                target: obj.default_coords.clone(),
            });
        }
        self.check_id_free(id)?;
        self.insert_object(obj, true)
    }

    /// Replace the entire registry and options with the imported data.
    pub fn import_all(&mut self, data: &Value) -> Result<()> {
        let map = data
            .as_object()
            .ok_or_else(|| Error::Schema("session file is not an object".into()))?;
        let mut options = SessionOptions::default();
        let mut tensors: IndexMap<String, TensorObject> = IndexMap::new();
        for (id, body) in map {
            if id == OPTIONS_KEY {
                options = options_from_json(body)?;
            } else {
                if id.starts_with('$') {
                    return Err(Error::Schema(format!(
                        "tensor IDs may not start with '$': \"{id}\""
                    )));
                }
                tensors.insert(id.clone(), tensor_from_json(id, body)?);
            }
        }
        // referential integrity across the whole file
        for (id, obj) in &tensors {
            if let Some(m) = &obj.metric_id {
                if !tensors.contains_key(m) {
                    return Err(Error::DanglingReference {
                        id: id.clone(),
                        target: m.clone(),
                    });
                }
            }
            if !tensors.contains_key(&obj.default_coords) {
                return Err(Error::DanglingReference {
                    id: id.clone(),
                    target: obj.default_coords.clone(),
                });
            }
        }
        self.tensors = tensors;
        self.options = options;
        Ok(())
    }

    pub fn import_all_from_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let data: Value =
            serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
        self.import_all(&data)
    }
}
