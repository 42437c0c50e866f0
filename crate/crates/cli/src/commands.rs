//! The command language shared by scripts and the REPL.

use std::process::ExitCode;
use tensorium::display::PostOp;
use tensorium::expr::{parse_expr, Expr, Style, SubRule};
use tensorium::session::{IndexConfig, Session};
use tensorium::{Error, Predicate, Relation, Result};

pub struct Context {
    pub session: Session,
    pub style: Style,
    pub quit: bool,
    /// Script-level shorthands defined with `let`; `$name` expands textually.
    defs: Vec<(String, String)>,
}

impl Context {
    pub fn new() -> Context {
        Context {
            session: Session::new(),
            style: Style::Plain,
            quit: false,
            defs: Vec::new(),
        }
    }

    fn expand_defs(&self, token: &str) -> String {
        if !token.contains('$') {
            return token.to_string();
        }
        let mut out = token.to_string();
        for (name, body) in &self.defs {
            out = out.replace(&format!("${name}"), &format!("({body})"));
        }
        out
    }
}

pub fn exit_code_for(e: &Error) -> ExitCode {
    match e {
        Error::Io(_) => ExitCode::from(2),
        Error::Schema(_) | Error::VersionUnsupported(_) => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

/// Shell-like tokenizer: whitespace-separated words with single- or
/// double-quoted segments kept verbatim.
fn tokenize(line: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut has_token = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '#' if !has_token || current.is_empty() => break,
            '\'' | '"' => {
                has_token = true;
                loop {
                    match chars.next() {
                        Some(q) if q == c => break,
                        Some(q) => current.push(q),
                        None => {
                            return Err(Error::Syntax {
                                pos: line.len(),
                                msg: "unterminated quote".into(),
                            })
                        }
                    }
                }
            }
            c if c.is_whitespace() => {
                if has_token {
                    out.push(std::mem::take(&mut current));
                    has_token = false;
                }
            }
            c => {
                has_token = true;
                current.push(c);
            }
        }
    }
    if has_token {
        out.push(current);
    }
    Ok(out)
}

/// Index configuration text: `{1,-1}`, `1,-1`, `+-`, or `{}` for scalars.
fn parse_indices(text: &str) -> Result<IndexConfig> {
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    let mut out = Vec::new();
    if inner.trim().is_empty() {
        return Ok(out);
    }
    if inner.chars().all(|c| c == '+' || c == '-') {
        for c in inner.chars() {
            out.push(if c == '+' { 1 } else { -1 });
        }
        return Ok(out);
    }
    for part in inner.split(',') {
        match part.trim() {
            "1" | "+1" | "+" | "u" => out.push(1),
            "-1" | "-" | "d" | "−1" => out.push(-1),
            other => {
                return Err(Error::Syntax {
                    pos: 0,
                    msg: format!("bad index position \"{other}\" (use 1 or -1)"),
                })
            }
        }
    }
    Ok(out)
}

/// Nested component syntax: `[a,b]`, `[[a,b],[c,d]]`, `diag(a,b,c,d)`, or a
/// bare expression for scalars.
fn parse_components(text: &str, rank: usize, dim: usize) -> Result<Vec<Expr>> {
    let text = text.trim();
    if rank == 2 {
        if let Some(inner) = text.strip_prefix("diag(").and_then(|t| t.strip_suffix(')')) {
            let entries = split_top_level(inner)?;
            if entries.len() != dim {
                return Err(Error::ShapeMismatch {
                    expected: dim,
                    got: entries.len(),
                });
            }
            let mut out = vec![Expr::int(0); dim * dim];
            for (i, e) in entries.iter().enumerate() {
                out[i * dim + i] = parse_expr(e)?;
            }
            return Ok(out);
        }
    }
    fn nested(text: &str, rank: usize, dim: usize, out: &mut Vec<Expr>) -> Result<()> {
        let text = text.trim();
        if rank == 0 {
            out.push(parse_expr(text)?);
            return Ok(());
        }
        let inner = text
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| Error::Syntax {
                pos: 0,
                msg: format!("expected {rank} levels of [...] nesting"),
            })?;
        let parts = split_top_level(inner)?;
        if parts.len() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                got: parts.len(),
            });
        }
        for p in parts {
            nested(&p, rank - 1, dim, out)?;
        }
        Ok(())
    }
    let mut out = Vec::new();
    if rank == 0 {
        let inner = text
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .unwrap_or(text);
        out.push(parse_expr(inner)?);
        return Ok(out);
    }
    nested(text, rank, dim, &mut out)?;
    Ok(out)
}

/// Split on commas at bracket depth zero.
fn split_top_level(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '[' | '(' => {
                depth += 1;
                current.push(c);
            }
            ']' | ')' => {
                depth -= 1;
                current.push(c);
            }
            ',' if depth == 0 => out.push(std::mem::take(&mut current)),
            c => current.push(c),
        }
    }
    if depth != 0 {
        return Err(Error::Syntax {
            pos: 0,
            msg: "unbalanced brackets".into(),
        });
    }
    out.push(current);
    Ok(out)
}

/// Substitution rules: "v=0; f(q1,q2,q3,q4)=0; t'=1" style, semicolon
/// separated. A left side `name(params...)` replaces the function head.
fn parse_sub_rules(text: &str) -> Result<Vec<SubRule>> {
    let mut out = Vec::new();
    for rule in text.split(';') {
        let rule = rule.trim();
        if rule.is_empty() {
            continue;
        }
        let (lhs, rhs) = rule.split_once('=').ok_or_else(|| Error::Syntax {
            pos: 0,
            msg: format!("bad substitution rule \"{rule}\" (expected lhs=rhs)"),
        })?;
        let replacement = parse_expr(rhs.trim())?;
        let lhs = lhs.trim();
        let target = parse_expr(lhs)?;
        out.push(match target {
            Expr::Sym(name) => SubRule::symbol(name, replacement),
            Expr::Func(head, args) if args.iter().all(|a| matches!(a, Expr::Sym(_))) => {
                let params = args
                    .iter()
                    .map(|a| match a {
                        Expr::Sym(s) => s.clone(),
                        _ => unreachable!(),
                    })
                    .collect();
                SubRule {
                    target: tensorium::expr::ReplaceTarget::FuncHead(head),
                    replacement: tensorium::expr::Replacement::FuncBody {
                        params,
                        body: replacement,
                    },
                }
            }
            exact => SubRule::exact(exact, replacement),
        });
    }
    Ok(out)
}

pub fn apply_assumption(session: &mut Session, text: &str) -> Result<()> {
    let text = text.trim();
    match text {
        "none" | "None" => {
            session.clear_assumptions();
            return Ok(());
        }
        "real" | "Reals" => {
            session.set_assume_real(true);
            return Ok(());
        }
        "!real" | "!Reals" => {
            session.set_assume_real(false);
            return Ok(());
        }
        _ => {}
    }
    for (op, relation) in [
        (">=", Relation::Geq),
        ("<=", Relation::Leq),
        ("==", Relation::EqConst),
        (">", Relation::Gt),
        ("<", Relation::Lt),
    ] {
        if let Some((lhs, rhs)) = text.split_once(op) {
            let symbol = lhs.trim();
            if symbol.is_empty() || !symbol.chars().all(|c| c.is_alphanumeric() || c == '_') {
                break;
            }
            session.add_assumption(Predicate {
                symbol: symbol.to_string(),
                relation,
                bound: parse_expr(rhs.trim())?,
            });
            return Ok(());
        }
    }
    Err(Error::Syntax {
        pos: 0,
        msg: format!("bad assumption \"{text}\" (expected e.g. \"r >= 0\")"),
    })
}

/// Trailing display options: [INDICES] [COORDS] [--sub RULES] [--activate].
struct DisplayArgs {
    indices: Option<IndexConfig>,
    coords: Option<String>,
    post: Vec<PostOp>,
}

fn parse_display_args(session: &Session, args: &[String]) -> Result<DisplayArgs> {
    let mut out = DisplayArgs {
        indices: None,
        coords: None,
        post: Vec::new(),
    };
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        if a == "--activate" {
            out.post.push(PostOp::Activate);
        } else if a == "--sub" {
            i += 1;
            let rules = args.get(i).ok_or_else(|| Error::Syntax {
                pos: 0,
                msg: "--sub needs a rule string".into(),
            })?;
            out.post.push(PostOp::Substitute(parse_sub_rules(rules)?));
        } else if a.starts_with('{') || a.chars().all(|c| matches!(c, '+' | '-')) && !a.is_empty() {
            out.indices = Some(parse_indices(a)?);
        } else if session.exists(a) {
            out.coords = Some(a.clone());
        } else {
            out.indices = Some(parse_indices(a)?);
        }
        i += 1;
    }
    Ok(out)
}

const HELP: &str = "\
commands:
  new-coordinates ID SYM...             define a coordinate system
  new-metric ID COORDS COMPS [SYMBOL]   define a metric (COMPS: diag(...) or [[..],..])
  new-tensor ID METRIC COORDS IDX COMPS [SYMBOL]
  transform-add SOURCE TARGET 'x=expr' ...
  calc FORMULA [SYMBOL]                 evaluate a tensor formula
  christoffel|riemann|ricci|ricci-scalar|einstein METRIC
  lagrangian|geodesic-lagrangian|geodesic-christoffel METRIC [COORDS]
  show|list ID [IDX] [COORDS] [--sub 'v=0'] [--activate]
  components ID [IDX] [COORDS]          raw component list
  line-element|volume-element METRIC [COORDS]
  info [ID]
  simplify ID                           re-simplify under current assumptions
  activate ID                           evaluate deferred derivatives
  delete ID | rename OLD NEW
  set-symbol ID SYM | set-indices ID IDX | set-coords ID COORDS
  set-assumptions 'r >= 0'|none|real|!real
  set-reserved SYM... | set-letters STR|default
  set-overwrite on|off | set-parallel on|off | set-workers N
  set-curve-parameter SYM|default
  export [ID] | save FILE | load FILE | import FILE
  let NAME EXPR                         shorthand; later $NAME expands (reserved symbols refused)
  bench christoffel METRIC [--repeat K]
  help | quit";

/// Execute one command line; returns the text to print.
pub fn run_line(ctx: &mut Context, line: &str) -> Result<String> {
    let raw_tokens = tokenize(line)?;
    if raw_tokens.is_empty() {
        return Ok(String::new());
    }
    let verb = raw_tokens[0].as_str();
    // `let NAME EXPR` defines a shorthand; reserved symbols are protected
    if verb == "let" {
        if raw_tokens.len() < 3 {
            return Err(Error::Syntax {
                pos: 0,
                msg: "let: expected `let NAME EXPR`".into(),
            });
        }
        let name = raw_tokens[1].clone();
        if ctx.session.options.reserved_symbols.contains(&name) {
            return Err(Error::ReservedSymbol(name));
        }
        if !name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_') {
            return Err(Error::Syntax {
                pos: 0,
                msg: format!("bad shorthand name \"{name}\""),
            });
        }
        let body = ctx.expand_defs(&raw_tokens[2..].join(" "));
        parse_expr(&body)?; // must be a valid expression
        ctx.defs.retain(|(n, _)| *n != name);
        ctx.defs.push((name.clone(), body));
        return Ok(format!("${name}"));
    }
    let tokens: Vec<String> = raw_tokens.iter().map(|t| ctx.expand_defs(t)).collect();
    let verb = tokens[0].as_str();
    let args = &tokens[1..];
    let s = &mut ctx.session;
    let need = |n: usize| -> Result<()> {
        if args.len() < n {
            Err(Error::Syntax {
                pos: 0,
                msg: format!("{verb}: expected at least {n} argument(s); see `help`"),
            })
        } else {
            Ok(())
        }
    };
    match verb {
        "help" => Ok(HELP.to_string()),
        "quit" | "exit" => {
            ctx.quit = true;
            Ok(String::new())
        }
        "new-coordinates" => {
            need(2)?;
            let id = s.new_coordinates(&args[0], &args[1..])?;
            Ok(id)
        }
        "new-metric" => {
            need(3)?;
            let dim = s.dimension(&args[1])?;
            let comps = parse_components(&args[2], 2, dim)?;
            let matrix: Vec<Vec<Expr>> = (0..dim)
                .map(|i| comps[i * dim..(i + 1) * dim].to_vec())
                .collect();
            let overwriting = s.exists(&args[0]) && s.options.allow_overwrite;
            let id = s.new_metric(&args[0], &args[1], matrix, args.get(3).map(|x| x.as_str()))?;
            if overwriting {
                Ok(format!(
                    "Overwriting the tensor \"{id}\". All curvature tensors previously \
                     calculated from the metric being overwritten have been deleted.\n{id}"
                ))
            } else {
                Ok(id)
            }
        }
        "new-tensor" => {
            need(5)?;
            let indices = parse_indices(&args[3])?;
            // "-" means: use the metric's default coordinate system
            let coords = if args[2] == "-" { None } else { Some(args[2].as_str()) };
            let dim = match coords {
                Some(c) => s.dimension(c)?,
                None => {
                    let metric_coords = s.get(&args[1])?.default_coords.clone();
                    s.dimension(&metric_coords)?
                }
            };
            let comps = parse_components(&args[4], indices.len(), dim)?;
            let warn = s.exists(&args[0]) && s.options.allow_overwrite;
            let id = s.new_tensor(
                &args[0],
                &args[1],
                coords,
                indices,
                comps,
                args.get(5).map(|x| x.as_str()),
            )?;
            if warn {
                Ok(format!("Overwriting the tensor \"{id}\".\n{id}"))
            } else {
                Ok(id)
            }
        }
        "transform-add" => {
            need(3)?;
            let mut rules = Vec::new();
            for r in &args[2..] {
                let (sym, expr) = r.split_once('=').ok_or_else(|| Error::Syntax {
                    pos: 0,
                    msg: format!("bad rule \"{r}\" (expected sym=expr)"),
                })?;
                rules.push((sym.trim().to_string(), parse_expr(expr.trim())?));
            }
            s.add_coord_transformation(&args[0], &args[1], rules)?;
            Ok(format!("{} -> {}", args[0], args[1]))
        }
        "calc" => {
            need(1)?;
            let id = s.calc(&args[0], args.get(1).map(|x| x.as_str()))?;
            Ok(id)
        }
        "christoffel" => {
            need(1)?;
            s.calc_christoffel(&args[0])
        }
        "riemann" => {
            need(1)?;
            s.calc_riemann(&args[0])
        }
        "ricci" => {
            need(1)?;
            s.calc_ricci_tensor(&args[0])
        }
        "ricci-scalar" => {
            need(1)?;
            s.calc_ricci_scalar(&args[0])
        }
        "einstein" => {
            need(1)?;
            s.calc_einstein(&args[0])
        }
        "lagrangian" => {
            need(1)?;
            s.calc_lagrangian(&args[0], args.get(1).map(|x| x.as_str()))
        }
        "geodesic-lagrangian" => {
            need(1)?;
            s.calc_geodesic_from_lagrangian(&args[0], args.get(1).map(|x| x.as_str()))
        }
        "geodesic-christoffel" => {
            need(1)?;
            s.calc_geodesic_from_christoffel(&args[0], args.get(1).map(|x| x.as_str()))
        }
        "show" | "list" => {
            need(1)?;
            let d = parse_display_args(s, &args[1..])?;
            if verb == "show" {
                s.show(&args[0], d.indices.as_ref(), d.coords.as_deref(), &d.post, ctx.style)
            } else {
                s.list_components(
                    &args[0],
                    d.indices.as_ref(),
                    d.coords.as_deref(),
                    &d.post,
                    ctx.style,
                )
            }
        }
        "components" => {
            need(1)?;
            let d = parse_display_args(s, &args[1..])?;
            let out = s.get_components(&args[0], d.indices.as_ref(), d.coords.as_deref())?;
            let mut lines = Vec::new();
            if out.defaults_used {
                lines.push(format!(
                    "Using the default index configuration {:?} and the default coordinate system \"{}\".",
                    out.indices, out.coords
                ));
            }
            let opts = tensorium::expr::DisplayOpts::default();
            lines.push(format!(
                "[{}]",
                out.components
                    .iter()
                    .map(|c| tensorium::expr::format_expr(c, ctx.style, &opts))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
            Ok(lines.join("\n"))
        }
        "line-element" => {
            need(1)?;
            let e = s.line_element(&args[0], args.get(1).map(|x| x.as_str()))?;
            Ok(tensorium::expr::format_expr(&e, ctx.style, &s.display_opts()))
        }
        "volume-element" => {
            need(1)?;
            let e = s.volume_element_squared(&args[0], args.get(1).map(|x| x.as_str()))?;
            Ok(tensorium::expr::format_expr(&e, ctx.style, &s.display_opts()))
        }
        "info" => s.info(args.first().map(|x| x.as_str())),
        "simplify" => {
            need(1)?;
            s.simplify_tensor(&args[0])
        }
        "activate" => {
            need(1)?;
            s.activate_tensor(&args[0])
        }
        "delete" => {
            need(1)?;
            s.delete(&args[0])?;
            Ok(String::new())
        }
        "rename" => {
            need(2)?;
            s.change_id(&args[0], &args[1])
        }
        "set-symbol" => {
            need(2)?;
            s.change_symbol(&args[0], &args[1])
        }
        "set-indices" => {
            need(2)?;
            s.change_default_indices(&args[0], parse_indices(&args[1])?)
        }
        "set-coords" => {
            need(2)?;
            s.change_default_coords(&args[0], &args[1])
        }
        "set-assumptions" => {
            need(1)?;
            apply_assumption(s, &args.join(" "))?;
            let a = &s.options.assumptions;
            Ok(format!(
                "AssumeReal: {}, User: [{}]",
                a.assume_real,
                a.predicates
                    .iter()
                    .map(|p| format!(
                        "{} {} {}",
                        p.symbol,
                        match p.relation {
                            Relation::Geq => ">=",
                            Relation::Gt => ">",
                            Relation::Leq => "<=",
                            Relation::Lt => "<",
                            Relation::EqConst => "==",
                        },
                        tensorium::expr::format_expr(
                            &p.bound,
                            Style::Plain,
                            &Default::default()
                        )
                    ))
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        }
        "set-reserved" => {
            need(1)?;
            let now = s.set_reserved_symbols(args);
            Ok(format!("[{}]", now.join(", ")))
        }
        "set-letters" => {
            need(1)?;
            let letters = if args[0] == "default" {
                s.set_index_letters(None)
            } else {
                s.set_index_letters(Some(&args[0]))
            };
            Ok(letters)
        }
        "set-overwrite" => {
            need(1)?;
            let on = args[0] == "on" || args[0] == "true";
            s.set_allow_overwrite(on);
            Ok(format!(
                "Overwriting tensors turned {}.",
                if on { "on" } else { "off" }
            ))
        }
        "set-parallel" => {
            need(1)?;
            let on = args[0] == "on" || args[0] == "true";
            let workers = s.set_parallelization(on);
            Ok(if on {
                format!("Parallelization enabled. {workers} workers available.")
            } else {
                "Parallelization disabled.".to_string()
            })
        }
        "set-workers" => {
            need(1)?;
            let n: usize = args[0].parse().map_err(|_| Error::Syntax {
                pos: 0,
                msg: "set-workers expects a number".into(),
            })?;
            s.set_workers(n);
            Ok(String::new())
        }
        "set-curve-parameter" => {
            need(1)?;
            let p = if args[0] == "default" {
                s.set_curve_parameter(None)?
            } else {
                s.set_curve_parameter(Some(&args[0]))?
            };
            Ok(p)
        }
        "export" => {
            let value = match args.first() {
                Some(id) => s.export_tensor(id)?,
                None => s.export_all(),
            };
            serde_json::to_string_pretty(&value).map_err(|e| Error::Schema(e.to_string()))
        }
        "save" => {
            need(1)?;
            // bare names get the conventional session extension
            let path = if args[0].contains('.') {
                args[0].clone()
            } else {
                format!("{}{}", args[0], tensorium::persist::SESSION_FILE_EXTENSION)
            };
            s.export_all_to_file(&path)?;
            Ok(format!("saved {path}"))
        }
        "load" | "import" => {
            need(1)?;
            s.import_all_from_file(&args[0])?;
            Ok(format!("loaded {}", args[0]))
        }
        "bench" => {
            need(2)?;
            if args[0] != "christoffel" {
                return Err(Error::Syntax {
                    pos: 0,
                    msg: "bench supports: bench christoffel METRIC [--repeat K]".into(),
                });
            }
            let metric = args[1].clone();
            let mut repeat = 3usize;
            if let Some(i) = args.iter().position(|a| a == "--repeat") {
                repeat = args
                    .get(i + 1)
                    .and_then(|x| x.parse().ok())
                    .filter(|k| *k > 0)
                    .ok_or_else(|| Error::Syntax {
                        pos: 0,
                        msg: "--repeat needs a positive number".into(),
                    })?;
            }
            bench_christoffel(s, &metric, repeat)
        }
        other => Err(Error::Syntax {
            pos: 0,
            msg: format!("unknown command \"{other}\"; see `help`"),
        }),
    }
}

/// Wall time of the Christoffel pipeline with and without parallel
/// simplification; caches are cleared between runs by reimporting the
/// session snapshot.
fn bench_christoffel(session: &mut Session, metric: &str, repeat: usize) -> Result<String> {
    session.get(metric)?;
    let snapshot = session.export_all();
    let workers = session.worker_count();
    let mut lines = Vec::new();
    let mut medians = Vec::new();
    for (label, parallel) in [("1 worker", false), (&format!("{workers} workers"), true)] {
        let mut times = Vec::with_capacity(repeat);
        for _ in 0..repeat {
            session.import_all(&snapshot)?;
            session.set_parallelization(parallel);
            let start = std::time::Instant::now();
            session.calc_christoffel(metric)?;
            times.push(start.elapsed().as_secs_f64());
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = times[times.len() / 2];
        medians.push(median);
        lines.push(format!("christoffel {metric} [{label}]: median {median:.3}s over {repeat} runs"));
    }
    lines.push(format!("speedup: {:.2}x", medians[0] / medians[1]));
    Ok(lines.join("\n"))
}
