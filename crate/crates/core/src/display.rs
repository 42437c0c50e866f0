//! Human-facing renderers: `show` (vector/matrix form) and `list` (unique
//! nonzero components up to sign, the best view for higher ranks).

use crate::error::Result;
use crate::expr::{
    activate, format_expr, is_zero, simplify, substitute_raw, DisplayOpts, Expr, Style, SubRule,
};
use crate::session::{IndexConfig, Session};
use crate::transform::for_each_multi;

/// A componentwise transform applied before rendering.
#[derive(Clone, Debug)]
pub enum PostOp {
    Substitute(Vec<SubRule>),
    Activate,
}

impl Session {
    /// Display options derived from the session state: reserved function
    /// heads print without arguments, and curve-parameter derivatives use
    /// dot notation.
    pub fn display_opts(&self) -> DisplayOpts {
        DisplayOpts {
            suppress_args: self.options.reserved_symbols.iter().cloned().collect(),
            curve_param: Some(self.options.curve_parameter.clone()),
        }
    }

    fn postprocess(&self, comps: Vec<Expr>, post: &[PostOp]) -> Vec<Expr> {
        if post.is_empty() {
            return comps;
        }
        let asm = &self.options.assumptions;
        comps
            .into_iter()
            .map(|mut c| {
                for op in post {
                    c = match op {
                        PostOp::Substitute(rules) => simplify(&substitute_raw(&c, rules), asm),
                        PostOp::Activate => activate(&c, asm),
                    };
                }
                c
            })
            .collect()
    }

    /// Index decorations like `^μ_ν` using the session index letters.
    fn letter_markers(&self, config: &IndexConfig) -> String {
        let letters = &self.options.index_letters;
        let mut out = String::new();
        let mut last: Option<i8> = None;
        for (i, pos) in config.iter().enumerate() {
            let letter = letters.get(i).copied().unwrap_or('?');
            if last != Some(*pos) {
                out.push(if *pos == 1 { '^' } else { '_' });
            }
            out.push(letter);
            last = Some(*pos);
        }
        out
    }

    /// Component labels like `_tt` or `^t_tr`, using coordinate symbols.
    fn coord_markers(&self, config: &IndexConfig, multi: &[usize], symbols: &[String]) -> String {
        let mut out = String::new();
        let mut last: Option<i8> = None;
        for (slot, pos) in config.iter().enumerate() {
            if last != Some(*pos) {
                out.push(if *pos == 1 { '^' } else { '_' });
            }
            out.push_str(&symbols[multi[slot]]);
            last = Some(*pos);
        }
        out
    }

    /// Render a tensor in vector/matrix form (listing form for rank > 2).
    pub fn show(
        &mut self,
        id: &str,
        indices: Option<&IndexConfig>,
        coords: Option<&str>,
        post: &[PostOp],
        style: Style,
    ) -> Result<String> {
        let out = self.get_components(id, indices, coords)?;
        if out.indices.len() > 2 {
            return self.list_components(id, Some(&out.indices), Some(&out.coords), post, style);
        }
        let comps = self.postprocess(out.components, post);
        let obj = self.get(id)?;
        let symbol = obj.symbol.clone();
        let opts = self.display_opts();
        let dim = self.dimension(&out.coords)?;
        let symbols = self.coord_symbols(&out.coords)?;
        let args = symbols.join(", ");
        let header = format!(
            "{id}: {symbol}{}({args}) = ",
            self.letter_markers(&out.indices)
        );
        let cells: Vec<String> = comps.iter().map(|c| format_expr(c, style, &opts)).collect();
        let body = match out.indices.len() {
            0 => cells[0].clone(),
            1 => {
                if style == Style::Latex {
                    format!("\\begin{{pmatrix}} {} \\end{{pmatrix}}", cells.join(" \\\\ "))
                } else {
                    format!("({})", cells.join(", "))
                }
            }
            _ => {
                if style == Style::Latex {
                    let rows: Vec<String> = (0..dim)
                        .map(|i| cells[i * dim..(i + 1) * dim].join(" & "))
                        .collect();
                    format!("\\begin{{pmatrix}} {} \\end{{pmatrix}}", rows.join(" \\\\ "))
                } else {
                    let widths: Vec<usize> = (0..dim)
                        .map(|j| {
                            (0..dim)
                                .map(|i| cells[i * dim + j].chars().count())
                                .max()
                                .unwrap_or(0)
                        })
                        .collect();
                    let mut rows = Vec::with_capacity(dim);
                    for i in 0..dim {
                        let row: Vec<String> = (0..dim)
                            .map(|j| {
                                let cell = &cells[i * dim + j];
                                let pad = widths[j] - cell.chars().count();
                                format!("{}{}", " ".repeat(pad), cell)
                            })
                            .collect();
                        rows.push(format!("( {} )", row.join("  ")));
                    }
                    format!("\n{}", rows.join("\n"))
                }
            }
        };
        Ok(format!("{header}{body}"))
    }

    /// List the unique nonzero components up to sign, grouped as chained
    /// equalities.
    pub fn list_components(
        &mut self,
        id: &str,
        indices: Option<&IndexConfig>,
        coords: Option<&str>,
        post: &[PostOp],
        style: Style,
    ) -> Result<String> {
        let out = self.get_components(id, indices, coords)?;
        let comps = self.postprocess(out.components, post);
        let obj = self.get(id)?;
        let symbol = obj.symbol.clone();
        let opts = self.display_opts();
        let asm = self.options.assumptions.clone();
        let dim = self.dimension(&out.coords)?;
        let symbols = self.coord_symbols(&out.coords)?;
        let rank = out.indices.len();

        struct Group {
            value: Expr,
            negated: Expr,
            labels: Vec<(String, bool)>, // (label, flipped sign)
        }
        let mut groups: Vec<Group> = Vec::new();
        let mut multis: Vec<Vec<usize>> = Vec::new();
        for_each_multi(dim, rank, |m| multis.push(m.to_vec()));
        for multi in &multis {
            let c = &comps[crate::transform::flat_index(multi, dim)];
            if c.is_num_zero() || is_zero(c, &asm).unwrap_or(false) {
                continue;
            }
            let label = format!("{symbol}{}", self.coord_markers(&out.indices, multi, &symbols));
            match groups
                .iter_mut()
                .find(|g| g.value == *c || g.negated == *c)
            {
                Some(g) => {
                    let flipped = g.negated == *c;
                    g.labels.push((label, flipped));
                }
                None => groups.push(Group {
                    negated: simplify(&Expr::neg(c.clone()), &asm),
                    value: c.clone(),
                    labels: vec![(label, false)],
                }),
            }
        }
        if groups.is_empty() {
            return Ok(format!("{id}:\nNo non-zero elements."));
        }
        let mut lines = vec![format!("{id}:")];
        for g in &groups {
            let mut parts: Vec<String> = Vec::with_capacity(g.labels.len() + 1);
            for (label, flipped) in &g.labels {
                parts.push(if *flipped {
                    format!("-{label}")
                } else {
                    label.clone()
                });
            }
            parts.push(format_expr(&g.value, style, &opts));
            lines.push(parts.join(" = "));
        }
        Ok(lines.join("\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

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

    fn minkowski() -> Session {
        let mut s = Session::new();
        s.new_coordinates("Cartesian", &syms(&["t", "x", "y", "z"])).unwrap();
        s.new_metric("Minkowski", "Cartesian", diag(&["-1", "1", "1", "1"]), Some("η"))
            .unwrap();
        s
    }

    #[test]
    fn list_groups_by_sign() {
        let mut s = minkowski();
        let out = s
            .list_components("Minkowski", None, None, &[], Style::Plain)
            .unwrap();
        assert_eq!(out, "Minkowski:\nη_tt = -η_xx = -η_yy = -η_zz = -1");
    }

    #[test]
    fn list_uses_coordinate_symbols_not_letters() {
        let mut s = minkowski();
        s.set_index_letters(Some("abcdef"));
        let out = s
            .list_components("Minkowski", None, None, &[], Style::Plain)
            .unwrap();
        assert!(out.contains("η_tt"));
        // show uses the letters
        let shown = s.show("Minkowski", None, None, &[], Style::Plain).unwrap();
        assert!(shown.contains("η_ab"));
    }

    #[test]
    fn zero_tensor_prints_sentinel() {
        let mut s = minkowski();
        s.new_tensor(
            "Zero",
            "Minkowski",
            None,
            vec![-1],
            vec![Expr::int(0); 4],
            None,
        )
        .unwrap();
        let out = s.list_components("Zero", None, None, &[], Style::Plain).unwrap();
        assert_eq!(out, "Zero:\nNo non-zero elements.");
    }

    #[test]
    fn show_scalar_and_matrix() {
        let mut s = minkowski();
        s.new_tensor(
            "K",
            "Minkowski",
            None,
            vec![],
            vec![parse_expr("x^2").unwrap()],
            Some("K"),
        )
        .unwrap();
        let out = s.show("K", None, None, &[], Style::Plain).unwrap();
        assert_eq!(out, "K: K(t, x, y, z) = x^2");
        let shown = s.show("Minkowski", None, None, &[], Style::Plain).unwrap();
        assert!(shown.starts_with("Minkowski: η_μν(t, x, y, z) = "));
        assert!(shown.contains("( -1  0  0  0 )"));
    }

    #[test]
    fn post_substitution_applies_before_render() {
        let mut s = minkowski();
        s.new_tensor(
            "V",
            "Minkowski",
            None,
            vec![1],
            vec![
                parse_expr("v").unwrap(),
                Expr::int(0),
                Expr::int(0),
                Expr::int(0),
            ],
            None,
        )
        .unwrap();
        let post = vec![PostOp::Substitute(vec![SubRule::symbol(
            "v",
            Expr::int(0),
        )])];
        let out = s.list_components("V", None, None, &post, Style::Plain).unwrap();
        assert_eq!(out, "V:\nNo non-zero elements.");
    }

    #[test]
    fn latex_show_produces_pmatrix() {
        let mut s = minkowski();
        let out = s.show("Minkowski", None, None, &[], Style::Latex).unwrap();
        assert!(out.contains("\\begin{pmatrix}"));
    }
}
