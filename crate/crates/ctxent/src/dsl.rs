//! Line-oriented text format for experiment files.
//!
//! One experiment per file; the file name convention is `.exp`. The grammar,
//! one directive per line (`#` starts a comment, blank lines are ignored):
//!
//! ```text
//! experiment <id>
//! model photon|spin|balls
//! # photon/spin:
//! init angle_deg=<float>
//! stage <label> filter angle_deg=<float>     # photon
//! stage <label> sg angle_deg=<float>         # spin
//! # balls:
//! ball <id> <attr>=<value> ...
//! init all
//! init where <attr>=<value> [and <attr>=<value> ...]
//! stage <label> observe <attr> refill by <attr>
//! stage <label> observe <attr> refill remove
//! stage <label> observe <attr> refill none
//! ```
//!
//! Identifiers (ids, labels, attributes, values) use `[A-Za-z0-9_.-]+`;
//! angles are degrees. `angle` is accepted as a shorthand for `angle_deg`.
//! Parsing is total — any byte sequence yields either a validated
//! [`ExperimentSpec`] or diagnostics with 1-based line/column positions,
//! ordered by position. [`render`] writes the canonical form, and
//! `parse(render(spec))` reproduces `spec` exactly.

use std::fmt;

use crate::models::{
    Ball, BallStage, BallsProcessSpec, ExperimentSpec, InitSelection, LabeledAngle, ModelSpec,
    PhotonChainSpec, Refill, SpinChainSpec,
};

/// Maximum accepted file size in bytes.
pub const MAX_BYTES: usize = 64 * 1024;

/// A named piece of experiment source text, size- and UTF-8-checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    path: String,
    text: String,
}

impl SourceFile {
    pub fn new(
        path: impl Into<String>,
        text: impl Into<String>,
    ) -> Result<Self, Vec<ParseDiagnostic>> {
        let text = text.into();
        if text.len() > MAX_BYTES {
            return Err(vec![ParseDiagnostic::error(
                1,
                1,
                format!("file exceeds {} KiB", MAX_BYTES / 1024),
            )]);
        }
        Ok(Self {
            path: path.into(),
            text,
        })
    }

    pub fn from_bytes(
        path: impl Into<String>,
        bytes: &[u8],
    ) -> Result<Self, Vec<ParseDiagnostic>> {
        if bytes.len() > MAX_BYTES {
            return Err(vec![ParseDiagnostic::error(
                1,
                1,
                format!("file exceeds {} KiB", MAX_BYTES / 1024),
            )]);
        }
        match std::str::from_utf8(bytes) {
            Ok(text) => Self::new(path, text),
            Err(e) => Err(vec![ParseDiagnostic::error(
                1,
                1,
                format!("file is not valid UTF-8: {e}"),
            )]),
        }
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// One parser finding, pointing at a 1-based (line, column) in the source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub severity: Severity,
    pub message: String,
}

impl ParseDiagnostic {
    fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.line, self.column, self.severity, self.message
        )
    }
}

/// A successfully parsed experiment plus any non-fatal findings.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub spec: ExperimentSpec,
    pub warnings: Vec<ParseDiagnostic>,
}

/// Parse experiment source. Errors collect everything wrong with the file,
/// ordered by position, rather than stopping at the first problem.
pub fn parse(src: &SourceFile) -> Result<Parsed, Vec<ParseDiagnostic>> {
    Parser::new(src).run()
}

/// Convenience: wrap text in a [`SourceFile`] and parse it.
pub fn parse_str(path: &str, text: &str) -> Result<Parsed, Vec<ParseDiagnostic>> {
    parse(&SourceFile::new(path, text)?)
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    col: usize,
}

/// Split one line into whitespace-separated tokens with 1-based char columns,
/// dropping everything from the first `#` on.
fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let content = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut toks = Vec::new();
    let mut start: Option<(usize, usize)> = None; // (byte index, 1-based column)
    for (char_idx, (byte_idx, ch)) in content.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((from, col)) = start.take() {
                toks.push(Tok {
                    text: &content[from..byte_idx],
                    col,
                });
            }
        } else if start.is_none() {
            start = Some((byte_idx, char_idx + 1));
        }
    }
    if let Some((from, col)) = start {
        toks.push(Tok {
            text: &content[from..],
            col,
        });
    }
    toks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelKind {
    Photon,
    Spin,
    Balls,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            ModelKind::Photon => "photon",
            ModelKind::Spin => "spin",
            ModelKind::Balls => "balls",
        }
    }
}

/// A balls stage plus the positions needed for post-hoc attribute checks.
struct PendingBallStage {
    stage: BallStage,
    line: usize,
    observe_col: usize,
    refill_col: usize,
}

struct Parser<'a> {
    lines: Vec<(usize, Vec<Tok<'a>>)>,
    diagnostics: Vec<ParseDiagnostic>,
    has_error: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a SourceFile) -> Self {
        let lines = src
            .text()
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, tokenize(l)))
            .filter(|(_, toks)| !toks.is_empty())
            .collect();
        Self {
            lines,
            diagnostics: Vec::new(),
            has_error: false,
        }
    }

    fn error(&mut self, line: usize, col: usize, message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic::error(line, col, message));
        self.has_error = true;
    }

    fn warning(&mut self, line: usize, col: usize, message: impl Into<String>) {
        self.diagnostics
            .push(ParseDiagnostic::warning(line, col, message));
    }

    /// `key=value` → (key, value, value column). Reports its own error.
    fn split_pair(&mut self, line: usize, tok: Tok<'a>) -> Option<(&'a str, &'a str, usize)> {
        match tok.text.split_once('=') {
            Some((key, value)) => {
                Some((key, value, tok.col + key.chars().count() + 1))
            }
            None => {
                self.error(
                    line,
                    tok.col,
                    format!("expected <name>=<value>, found '{}'", tok.text),
                );
                None
            }
        }
    }

    /// Parse a finite float or report "bad number".
    fn number(&mut self, line: usize, col: usize, text: &str) -> Option<f64> {
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.error(line, col, format!("bad number '{text}'"));
                None
            }
        }
    }

    /// An `angle_deg=<float>` (or `angle=<float>`) argument.
    fn angle_arg(&mut self, line: usize, tok: Tok<'a>) -> Option<f64> {
        let (key, value, value_col) = self.split_pair(line, tok)?;
        if key != "angle_deg" && key != "angle" {
            self.error(
                line,
                tok.col,
                format!("expected angle_deg=<float>, found '{key}'"),
            );
            return None;
        }
        self.number(line, value_col, value)
    }

    fn identifier(&mut self, line: usize, tok: Tok<'a>, what: &str) -> Option<&'a str> {
        if is_identifier(tok.text) {
            Some(tok.text)
        } else {
            self.error(
                line,
                tok.col,
                format!("invalid {what} '{}'", tok.text),
            );
            None
        }
    }

    fn no_extra(&mut self, line: usize, toks: &[Tok<'a>], from: usize) {
        if let Some(extra) = toks.get(from) {
            self.error(
                line,
                extra.col,
                format!("unexpected token '{}'", extra.text),
            );
        }
    }

    fn run(mut self) -> Result<Parsed, Vec<ParseDiagnostic>> {
        // where each directive kind occurs, for order checks
        let model_lines: Vec<usize> = self
            .lines
            .iter()
            .filter(|(_, t)| t[0].text == "model")
            .map(|(n, _)| *n)
            .collect();
        let init_lines: Vec<usize> = self
            .lines
            .iter()
            .filter(|(_, t)| t[0].text == "init")
            .map(|(n, _)| *n)
            .collect();

        let mut experiment: Option<String> = None;
        let mut model: Option<ModelKind> = None;
        let mut quantum_init: Option<f64> = None;
        let mut balls_init: Option<InitSelection> = None;
        let mut init_where_cols: Vec<(usize, usize, String)> = Vec::new(); // line, col, attr
        let mut init_seen = false;
        let mut universe: Vec<Ball> = Vec::new();
        let mut quantum_stages: Vec<LabeledAngle> = Vec::new();
        let mut ball_stages: Vec<PendingBallStage> = Vec::new();
        let mut stage_labels: Vec<String> = Vec::new();

        let lines = std::mem::take(&mut self.lines);
        for (line, toks) in &lines {
            let line = *line;
            let head = toks[0];
            match head.text {
                "experiment" => {
                    if experiment.is_some() {
                        self.error(line, head.col, "duplicate 'experiment' directive");
                        continue;
                    }
                    let Some(id_tok) = toks.get(1).copied() else {
                        self.error(line, head.col, "expected experiment id");
                        continue;
                    };
                    if let Some(id) = self.identifier(line, id_tok, "experiment id") {
                        experiment = Some(id.to_owned());
                    }
                    self.no_extra(line, toks, 2);
                }
                "model" => {
                    if model.is_some() {
                        self.error(line, head.col, "duplicate 'model' directive");
                        continue;
                    }
                    let Some(kind_tok) = toks.get(1).copied() else {
                        self.error(line, head.col, "expected model name");
                        continue;
                    };
                    match kind_tok.text {
                        "photon" => model = Some(ModelKind::Photon),
                        "spin" => model = Some(ModelKind::Spin),
                        "balls" => model = Some(ModelKind::Balls),
                        other => {
                            self.error(line, kind_tok.col, format!("unknown model '{other}'"));
                        }
                    }
                    self.no_extra(line, toks, 2);
                }
                "ball" => {
                    match model {
                        None => {
                            if model_lines.iter().any(|&l| l > line) {
                                self.error(line, head.col, "'ball' before 'model'");
                            }
                            continue;
                        }
                        Some(ModelKind::Balls) => {}
                        Some(kind) => {
                            self.error(
                                line,
                                head.col,
                                format!("'ball' directive not valid for model '{}'", kind.name()),
                            );
                            continue;
                        }
                    }
                    let Some(id_tok) = toks.get(1).copied() else {
                        self.error(line, head.col, "expected ball id");
                        continue;
                    };
                    let Some(id) = self.identifier(line, id_tok, "ball id") else {
                        continue;
                    };
                    if toks.len() < 3 {
                        self.error(line, head.col, "ball needs at least one <attr>=<value>");
                        continue;
                    }
                    let mut ball = Ball {
                        id: id.to_owned(),
                        attributes: Default::default(),
                    };
                    for tok in &toks[2..] {
                        let Some((attr, value, value_col)) = self.split_pair(line, *tok) else {
                            continue;
                        };
                        if !is_identifier(attr) {
                            self.error(line, tok.col, format!("invalid attribute '{attr}'"));
                            continue;
                        }
                        if !is_identifier(value) {
                            self.error(line, value_col, format!("invalid value '{value}'"));
                            continue;
                        }
                        if ball
                            .attributes
                            .insert(attr.to_owned(), value.to_owned())
                            .is_some()
                        {
                            self.error(line, tok.col, format!("duplicate attribute '{attr}'"));
                        }
                    }
                    universe.push(ball);
                }
                "init" => {
                    if init_seen {
                        self.error(line, head.col, "duplicate 'init' directive");
                        continue;
                    }
                    init_seen = true;
                    let Some(kind) = model else {
                        if model_lines.iter().any(|&l| l > line) {
                            self.error(line, head.col, "'init' before 'model'");
                        }
                        continue;
                    };
                    match kind {
                        ModelKind::Photon | ModelKind::Spin => {
                            let Some(tok) = toks.get(1).copied() else {
                                self.error(line, head.col, "expected angle_deg=<float>");
                                continue;
                            };
                            quantum_init = self.angle_arg(line, tok);
                            self.no_extra(line, toks, 2);
                        }
                        ModelKind::Balls => match toks.get(1).map(|t| t.text) {
                            Some("all") => {
                                balls_init = Some(InitSelection::All);
                                self.no_extra(line, toks, 2);
                            }
                            Some("where") => {
                                let mut wanted = Vec::new();
                                let mut i = 2;
                                loop {
                                    let Some(tok) = toks.get(i).copied() else {
                                        self.error(
                                            line,
                                            head.col,
                                            "expected <attr>=<value> after 'where'",
                                        );
                                        break;
                                    };
                                    if let Some((attr, value, value_col)) =
                                        self.split_pair(line, tok)
                                    {
                                        if !is_identifier(attr) {
                                            self.error(
                                                line,
                                                tok.col,
                                                format!("invalid attribute '{attr}'"),
                                            );
                                        } else if !is_identifier(value) {
                                            self.error(
                                                line,
                                                value_col,
                                                format!("invalid value '{value}'"),
                                            );
                                        } else {
                                            init_where_cols.push((
                                                line,
                                                tok.col,
                                                attr.to_owned(),
                                            ));
                                            wanted.push((attr.to_owned(), value.to_owned()));
                                        }
                                    }
                                    i += 1;
                                    match toks.get(i).map(|t| t.text) {
                                        Some("and") => i += 1,
                                        Some(other) => {
                                            let col = toks[i].col;
                                            self.error(
                                                line,
                                                col,
                                                format!("expected 'and', found '{other}'"),
                                            );
                                            break;
                                        }
                                        None => break,
                                    }
                                }
                                balls_init = Some(InitSelection::Where(wanted));
                            }
                            Some(other) => {
                                let col = toks[1].col;
                                self.error(
                                    line,
                                    col,
                                    format!("expected 'all' or 'where', found '{other}'"),
                                );
                            }
                            None => {
                                self.error(line, head.col, "expected 'all' or 'where'");
                            }
                        },
                    }
                }
                "stage" => {
                    let Some(kind) = model else {
                        if model_lines.iter().any(|&l| l > line) {
                            self.error(line, head.col, "'stage' before 'model'");
                        }
                        continue;
                    };
                    if !init_seen && init_lines.iter().any(|&l| l > line) {
                        self.error(line, head.col, "stage before 'init'");
                    }
                    let Some(label_tok) = toks.get(1).copied() else {
                        self.error(line, head.col, "expected stage label");
                        continue;
                    };
                    let Some(label) = self.identifier(line, label_tok, "stage label") else {
                        continue;
                    };
                    if stage_labels.iter().any(|l| l == label) {
                        self.error(
                            line,
                            label_tok.col,
                            format!("duplicate stage label '{label}'"),
                        );
                        continue;
                    }
                    stage_labels.push(label.to_owned());

                    let expected = match kind {
                        ModelKind::Photon => "filter",
                        ModelKind::Spin => "sg",
                        ModelKind::Balls => "observe",
                    };
                    match toks.get(2) {
                        Some(t) if t.text == expected => {}
                        Some(t) => {
                            self.error(
                                line,
                                t.col,
                                format!(
                                    "expected '{expected}' for model '{}', found '{}'",
                                    kind.name(),
                                    t.text
                                ),
                            );
                            continue;
                        }
                        None => {
                            self.error(line, head.col, format!("expected '{expected}'"));
                            continue;
                        }
                    }

                    match kind {
                        ModelKind::Photon | ModelKind::Spin => {
                            let Some(tok) = toks.get(3).copied() else {
                                self.error(line, head.col, "expected angle_deg=<float>");
                                continue;
                            };
                            if let Some(angle) = self.angle_arg(line, tok) {
                                quantum_stages.push(LabeledAngle::new(label, angle));
                            }
                            self.no_extra(line, toks, 4);
                        }
                        ModelKind::Balls => {
                            let Some(attr_tok) = toks.get(3).copied() else {
                                self.error(line, head.col, "expected attribute to observe");
                                continue;
                            };
                            let Some(observe) = self.identifier(line, attr_tok, "attribute")
                            else {
                                continue;
                            };
                            match toks.get(4) {
                                Some(t) if t.text == "refill" => {}
                                Some(t) => {
                                    self.error(
                                        line,
                                        t.col,
                                        format!("expected 'refill', found '{}'", t.text),
                                    );
                                    continue;
                                }
                                None => {
                                    self.error(line, head.col, "expected refill clause");
                                    continue;
                                }
                            }
                            let (refill, refill_col, next) = match toks.get(5) {
                                Some(t) if t.text == "by" => {
                                    let Some(by_tok) = toks.get(6).copied() else {
                                        self.error(line, t.col, "expected attribute after 'by'");
                                        continue;
                                    };
                                    let Some(attr) = self.identifier(line, by_tok, "attribute")
                                    else {
                                        continue;
                                    };
                                    (Refill::ByOutcome(attr.to_owned()), by_tok.col, 7)
                                }
                                Some(t) if t.text == "remove" => {
                                    (Refill::RemoveDrawn, t.col, 6)
                                }
                                Some(t) if t.text == "none" => (Refill::None, t.col, 6),
                                Some(t) => {
                                    self.error(
                                        line,
                                        t.col,
                                        format!(
                                            "expected 'by', 'remove' or 'none', found '{}'",
                                            t.text
                                        ),
                                    );
                                    continue;
                                }
                                None => {
                                    self.error(
                                        line,
                                        toks[4].col,
                                        "expected 'by', 'remove' or 'none'",
                                    );
                                    continue;
                                }
                            };
                            self.no_extra(line, toks, next);
                            ball_stages.push(PendingBallStage {
                                stage: BallStage {
                                    label: label.to_owned(),
                                    observe: observe.to_owned(),
                                    refill,
                                },
                                line,
                                observe_col: attr_tok.col,
                                refill_col,
                            });
                        }
                    }
                }
                other => {
                    self.error(line, head.col, format!("unknown directive '{other}'"));
                }
            }
        }

        // missing-directive checks, most fundamental first
        let Some(id) = experiment else {
            self.error(1, 1, "missing 'experiment' directive");
            return self.finish(None);
        };
        let Some(kind) = model else {
            self.error(1, 1, "missing 'model' directive");
            return self.finish(None);
        };
        if !init_seen {
            self.error(1, 1, "missing 'init' directive");
        }
        if stage_labels.is_empty() {
            self.error(1, 1, "missing 'stage' directive");
        }

        let model_spec = match kind {
            ModelKind::Photon => quantum_init.map(|init| {
                ModelSpec::Photon(PhotonChainSpec {
                    init_angle_deg: init,
                    filters: std::mem::take(&mut quantum_stages),
                })
            }),
            ModelKind::Spin => quantum_init.map(|init| {
                ModelSpec::Spin(SpinChainSpec {
                    init_angle_deg: init,
                    axes: std::mem::take(&mut quantum_stages),
                })
            }),
            ModelKind::Balls => {
                if universe.is_empty() {
                    self.error(1, 1, "missing 'ball' directive");
                }
                // attribute names must exist somewhere in the universe
                let known = |attr: &str| {
                    universe.iter().any(|b| b.attributes.contains_key(attr))
                };
                for (line, col, attr) in &init_where_cols {
                    if !universe.is_empty() && !known(attr) {
                        self.error(
                            *line,
                            *col,
                            format!("unknown attribute '{attr}' in predicate"),
                        );
                    }
                }
                for pending in &ball_stages {
                    if !universe.is_empty() && !known(&pending.stage.observe) {
                        self.error(
                            pending.line,
                            pending.observe_col,
                            format!("unknown attribute '{}'", pending.stage.observe),
                        );
                    }
                    if let Refill::ByOutcome(attr) = &pending.stage.refill {
                        if !universe.is_empty() && !known(attr) {
                            self.error(
                                pending.line,
                                pending.refill_col,
                                format!("unknown attribute '{attr}'"),
                            );
                        } else if attr != &pending.stage.observe {
                            self.warning(
                                pending.line,
                                pending.refill_col,
                                format!(
                                    "refill attribute '{attr}' differs from observed '{}'",
                                    pending.stage.observe
                                ),
                            );
                        }
                    }
                }
                balls_init.map(|init| {
                    ModelSpec::Balls(BallsProcessSpec {
                        universe: std::mem::take(&mut universe),
                        init,
                        stages: ball_stages.drain(..).map(|p| p.stage).collect(),
                    })
                })
            }
        };

        let spec = model_spec.and_then(|model| {
            if self.has_error {
                None
            } else {
                Some(ExperimentSpec { id, model })
            }
        });
        self.finish(spec)
    }

    fn finish(mut self, spec: Option<ExperimentSpec>) -> Result<Parsed, Vec<ParseDiagnostic>> {
        self.diagnostics.sort();
        match spec {
            Some(spec) if !self.has_error => Ok(Parsed {
                spec,
                warnings: self.diagnostics,
            }),
            _ => {
                if !self.has_error {
                    // every failure carries at least one error
                    self.diagnostics
                        .push(ParseDiagnostic::error(1, 1, "invalid experiment file"));
                    self.diagnostics.sort();
                }
                Err(self.diagnostics)
            }
        }
    }
}

/// Canonical text for a spec: directives in a fixed order, angles printed
/// with shortest round-tripping precision, ball attributes sorted by name.
pub fn render(spec: &ExperimentSpec) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    let _ = writeln!(out, "experiment {}", spec.id);
    match &spec.model {
        ModelSpec::Photon(p) => {
            let _ = writeln!(out, "model photon");
            let _ = writeln!(out, "init angle_deg={}", p.init_angle_deg);
            for f in &p.filters {
                let _ = writeln!(out, "stage {} filter angle_deg={}", f.label, f.angle_deg);
            }
        }
        ModelSpec::Spin(s) => {
            let _ = writeln!(out, "model spin");
            let _ = writeln!(out, "init angle_deg={}", s.init_angle_deg);
            for a in &s.axes {
                let _ = writeln!(out, "stage {} sg angle_deg={}", a.label, a.angle_deg);
            }
        }
        ModelSpec::Balls(b) => {
            let _ = writeln!(out, "model balls");
            for ball in &b.universe {
                let _ = write!(out, "ball {}", ball.id);
                for (attr, value) in &ball.attributes {
                    let _ = write!(out, " {attr}={value}");
                }
                out.push('\n');
            }
            match &b.init {
                InitSelection::All => {
                    let _ = writeln!(out, "init all");
                }
                InitSelection::Where(wanted) => {
                    let clauses: Vec<String> = wanted
                        .iter()
                        .map(|(attr, value)| format!("{attr}={value}"))
                        .collect();
                    let _ = writeln!(out, "init where {}", clauses.join(" and "));
                }
            }
            for stage in &b.stages {
                let refill = match &stage.refill {
                    Refill::ByOutcome(attr) => format!("refill by {attr}"),
                    Refill::RemoveDrawn => "refill remove".to_owned(),
                    Refill::None => "refill none".to_owned(),
                };
                let _ = writeln!(
                    out,
                    "stage {} observe {} {}",
                    stage.label, stage.observe, refill
                );
            }
        }
    }
    out
}
