//! MacKay alist text format.
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: 1-based check indices of each column, zero padded>
//! <m lines: 1-based variable indices of each row, zero padded>
//! ```

use super::{TannerError, TannerGraph};

pub fn write_alist(graph: &TannerGraph) -> String {
    let mut out = String::new();
    let join = |xs: &mut dyn Iterator<Item = usize>| xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let max_col = graph.max_var_degree();
    let max_row = graph.max_check_degree();
    out.push_str(&format!("{} {}\n{} {}\n", graph.n(), graph.m(), max_col, max_row));
    out.push_str(&join(&mut (0..graph.n()).map(|i| graph.var_neighbors(i).len())));
    out.push('\n');
    out.push_str(&join(&mut (0..graph.m()).map(|j| graph.check_neighbors(j).len())));
    out.push('\n');
    for i in 0..graph.n() {
        let adj = graph.var_neighbors(i);
        let padded = adj.iter().map(|&j| j + 1).chain(std::iter::repeat_n(0, max_col - adj.len()));
        out.push_str(&join(&mut padded.into_iter()));
        out.push('\n');
    }
    for j in 0..graph.m() {
        let adj = graph.check_neighbors(j);
        let padded = adj.iter().map(|&i| i + 1).chain(std::iter::repeat_n(0, max_row - adj.len()));
        out.push_str(&join(&mut padded.into_iter()));
        out.push('\n');
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next nonblank line as parsed integers, with its 1-based line number.
    fn next_ints(&mut self, what: &str) -> Result<(usize, Vec<usize>), TannerError> {
        for (k, line) in self.inner.by_ref() {
            self.last = k + 1;
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| TannerError::Alist {
                        line: k + 1,
                        msg: format!("invalid integer {t:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            return Ok((k + 1, nums));
        }
        Err(TannerError::Alist {
            line: self.last + 1,
            msg: format!("unexpected end of input, expected {what}"),
        })
    }

    fn expect_len(&mut self, what: &str, len: usize) -> Result<(usize, Vec<usize>), TannerError> {
        let (line, v) = self.next_ints(what)?;
        if v.len() != len {
            return Err(TannerError::Alist {
                line,
                msg: format!("expected {len} entries for {what}, found {}", v.len()),
            });
        }
        Ok((line, v))
    }
}

pub fn parse_alist(text: &str) -> Result<TannerGraph, TannerError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (_, dims) = lines.expect_len("header \"n m\"", 2)?;
    let (n, m) = (dims[0], dims[1]);
    let (_, maxes) = lines.expect_len("maximum degrees", 2)?;
    let (max_col, max_row) = (maxes[0], maxes[1]);
    let (col_line, col_deg) = lines.expect_len("column degrees", n)?;
    let (row_line, row_deg) = lines.expect_len("row degrees", m)?;
    if col_deg.iter().copied().max().unwrap_or(0) > max_col {
        return Err(TannerError::Alist {
            line: col_line,
            msg: format!("column degree exceeds declared maximum {max_col}"),
        });
    }
    if row_deg.iter().copied().max().unwrap_or(0) > max_row {
        return Err(TannerError::Alist {
            line: row_line,
            msg: format!("row degree exceeds declared maximum {max_row}"),
        });
    }

    let read_lists = |lines: &mut Lines, count: usize, degs: &[usize], bound: usize, what: &str| {
        let mut lists = Vec::with_capacity(count);
        for (k, &deg) in degs.iter().enumerate().take(count) {
            let (line, entries) = lines.next_ints(what)?;
            let idx: Vec<usize> = entries.into_iter().filter(|&x| x != 0).collect();
            if idx.len() != deg {
                return Err(TannerError::Alist {
                    line,
                    msg: format!("{what} {} lists {} entries, degree is {deg}", k + 1, idx.len()),
                });
            }
            if let Some(&bad) = idx.iter().find(|&&x| x > bound) {
                return Err(TannerError::Alist {
                    line,
                    msg: format!("index {bad} out of range 1..={bound}"),
                });
            }
            lists.push((line, idx.into_iter().map(|x| x - 1).collect::<Vec<_>>()));
        }
        Ok(lists)
    };

    let cols = read_lists(&mut lines, n, &col_deg, m, "column")?;
    let rows = read_lists(&mut lines, m, &row_deg, n, "row")?;

    // the two halves must describe the same edge set
    let mut from_cols: Vec<(usize, usize)> = cols
        .iter()
        .enumerate()
        .flat_map(|(i, (_, js))| js.iter().map(move |&j| (i, j)))
        .collect();
    let mut from_rows: Vec<(usize, usize)> = rows
        .iter()
        .enumerate()
        .flat_map(|(j, (_, is))| is.iter().map(move |&i| (i, j)))
        .collect();
    from_cols.sort_unstable();
    from_rows.sort_unstable();
    if from_cols != from_rows {
        let line = rows.first().map_or(lines.last, |(l, _)| *l);
        return Err(TannerError::Alist {
            line,
            msg: "row lists disagree with column lists".into(),
        });
    }
    TannerGraph::from_check_lists(n, rows.into_iter().map(|(_, r)| r).collect())
}
