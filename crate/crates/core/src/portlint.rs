//! CUDA <-> OpenCL kernel-source translation by token-level search and
//! replace, plus the five-step porting checklist.
//!
//! A small lexer separates comments, string and character literals from
//! code so rewrites never touch text inside them. Everything else is a
//! table of token rewrites and a handful of pattern rules for indexing,
//! synchronisation and kernel-argument qualifiers.
//!
//! The two compound indexing forms are only recognised in their compact
//! spelling (`blockIdx.x*blockDim.x+threadIdx.x`, `gridDim.x*blockDim.x`),
//! so every bidirectional rule is an exact inverse of its partner. Other
//! spellings still translate correctly, term by term.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    ToOpenCl,
    ToCuda,
}

impl Direction {
    pub fn reverse(self) -> Self {
        match self {
            Self::ToOpenCl => Self::ToCuda,
            Self::ToCuda => Self::ToOpenCl,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "opencl" | "cl" => Ok(Self::ToOpenCl),
            "cuda" => Ok(Self::ToCuda),
            _ => Err(Error::Config(format!(
                "unknown target dialect '{s}' (opencl, cuda)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Info => "info",
            Self::Warning => "warning",
            Self::Error => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortDiagnostic {
    pub severity: Severity,
    /// 1-based source line.
    pub line: usize,
    pub message: String,
    /// Porting checklist step, 1 to 5.
    pub step: u8,
}

impl PortDiagnostic {
    /// `file:line: severity: message [step N]`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}: {}: {} [step {}]",
            self.line, self.severity, self.message, self.step
        )
    }
}

/// One row of the keyword table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mapping {
    pub cuda: &'static str,
    pub opencl: &'static str,
    pub bidirectional: bool,
    pub note: &'static str,
}

const fn bi(cuda: &'static str, opencl: &'static str) -> Mapping {
    Mapping {
        cuda,
        opencl,
        bidirectional: true,
        note: "",
    }
}

const fn uni(cuda: &'static str, opencl: &'static str, note: &'static str) -> Mapping {
    Mapping {
        cuda,
        opencl,
        bidirectional: false,
        note,
    }
}

/// The keyword table, longest CUDA pattern first. `D` stands for `x`, `y`
/// or `z` and `d` for the matching `0`, `1` or `2`.
pub const MAPPINGS: &[Mapping] = &[
    bi("blockIdx.D*blockDim.D+threadIdx.D", "get_global_id(d)"),
    bi("__threadfence_block()", "mem_fence(CLK_LOCAL_MEM_FENCE)"),
    bi("gridDim.D*blockDim.D", "get_global_size(d)"),
    bi("__syncthreads()", "barrier(CLK_LOCAL_MEM_FENCE)"),
    uni("__threadfence()", "", "no OpenCL equivalent"),
    bi("__constant__", "__constant"),
    bi("__restrict__", "restrict"),
    bi("threadIdx.D", "get_local_id(d)"),
    uni(
        "__device__",
        "",
        "function qualifier removed; there is no OpenCL counterpart",
    ),
    bi("blockIdx.D", "get_group_id(d)"),
    bi("blockDim.D", "get_local_size(d)"),
    bi("__global__", "__kernel"),
    bi("__shared__", "__local"),
    bi("gridDim.D", "get_num_groups(d)"),
    uni(
        "",
        "__global",
        "pointer arguments need no address-space qualifier in CUDA",
    ),
];

/// Simple identifier rewrites used by the translator.
const KEYWORDS: &[(&str, &str)] = &[
    ("__global__", "__kernel"),
    ("__shared__", "__local"),
    ("__constant__", "__constant"),
    ("__restrict__", "restrict"),
];

const INDEX_VARS: &[(&str, &str)] = &[
    ("threadIdx", "get_local_id"),
    ("blockIdx", "get_group_id"),
    ("blockDim", "get_local_size"),
    ("gridDim", "get_num_groups"),
];

const ADDRESS_QUALIFIERS: &[&str] = &[
    "__global",
    "global",
    "__local",
    "local",
    "__constant",
    "constant",
    "__private",
    "private",
];

const CUDA_BUILTINS: &[&str] = &[
    "__expf",
    "__logf",
    "__sinf",
    "__cosf",
    "__powf",
    "__fdividef",
    "__saturatef",
    "__fmaf_rn",
    "rsqrtf",
    "atomicAdd",
    "atomicSub",
    "atomicMin",
    "atomicMax",
    "atomicCAS",
    "atomicExch",
    "__shfl_sync",
    "__ldg",
    "tex2D",
];

const OPENCL_PREFIXES: &[&str] = &[
    "native_",
    "half_",
    "vload",
    "vstore",
    "convert_",
    "atomic_",
    "atom_",
    "read_image",
    "write_image",
];

const OPENCL_NO_EQUIVALENT: &[&str] = &["get_work_dim", "get_global_offset"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Ident,
    Number,
    Punct,
    Space,
    Comment,
    Str,
}

#[derive(Clone, Copy, Debug)]
struct Tok<'a> {
    kind: Kind,
    text: &'a str,
    line: usize,
}

fn lex(src: &str) -> (Vec<Tok<'_>>, Vec<PortDiagnostic>) {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    let (mut i, mut line) = (0, 1);
    while i < bytes.len() {
        let start = i;
        let start_line = line;
        let c = bytes[i];
        let kind = if c.is_ascii_whitespace() {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            Kind::Space
        } else if src[i..].starts_with("//") {
            i = src[i..].find('\n').map_or(bytes.len(), |k| i + k);
            Kind::Comment
        } else if src[i..].starts_with("/*") {
            match src[i + 2..].find("*/") {
                Some(k) => i += k + 4,
                None => {
                    diags.push(diag(Severity::Error, line, "unterminated block comment", 5));
                    i = bytes.len();
                }
            }
            Kind::Comment
        } else if c == b'"' || c == b'\'' {
            i += 1;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => {
                        diags.push(diag(Severity::Error, line, "unterminated literal", 5));
                        break;
                    }
                    Some(b'\\') => i += 2,
                    Some(&b) if b == c => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            i = i.min(bytes.len());
            Kind::Str
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Kind::Ident
        } else if c.is_ascii_digit() {
            while i < bytes.len() {
                let b = bytes[i];
                let exp_sign = (b == b'+' || b == b'-')
                    && matches!(bytes[i - 1], b'e' | b'E')
                    && !src[start..i].starts_with("0x");
                if b.is_ascii_alphanumeric() || b == b'.' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            Kind::Number
        } else {
            i += src[i..].chars().next().map_or(1, char::len_utf8);
            Kind::Punct
        };
        let text = &src[start..i];
        line += text.bytes().filter(|&b| b == b'\n').count();
        toks.push(Tok {
            kind,
            text,
            line: start_line,
        });
    }
    (toks, diags)
}

fn diag(severity: Severity, line: usize, message: impl Into<String>, step: u8) -> PortDiagnostic {
    PortDiagnostic {
        severity,
        line,
        message: message.into(),
        step,
    }
}

fn dim_index(d: &str) -> Option<usize> {
    ["x", "y", "z"].iter().position(|&x| x == d)
}

fn dim_name(n: usize) -> &'static str {
    ["x", "y", "z"][n]
}

/// A finding of the translator; rewrite notes only appear in the checklist.
struct Finding {
    diag: PortDiagnostic,
    rewrite: bool,
}

struct Translator<'a> {
    toks: Vec<Tok<'a>>,
    dir: Direction,
    out: String,
    findings: Vec<Finding>,
    /// Token indices before which `__global ` is inserted.
    insert_global: Vec<bool>,
    /// `__global` tokens inside kernel parameter lists.
    param_global: Vec<bool>,
    uses_indexing: bool,
    uses_launch_api: bool,
}

impl<'a> Translator<'a> {
    fn new(src: &'a str, dir: Direction) -> Self {
        let (toks, lex_diags) = lex(src);
        let n = toks.len();
        let mut t = Self {
            toks,
            dir,
            out: String::with_capacity(src.len() + 64),
            findings: lex_diags
                .into_iter()
                .map(|diag| Finding {
                    diag,
                    rewrite: false,
                })
                .collect(),
            insert_global: vec![false; n],
            param_global: vec![false; n],
            uses_indexing: false,
            uses_launch_api: false,
        };
        t.scan_kernel_params();
        t
    }

    fn text(&self, i: usize) -> &'a str {
        self.toks.get(i).map_or("", |t| t.text)
    }

    fn is_code(&self, i: usize) -> bool {
        self.toks
            .get(i)
            .is_some_and(|t| !matches!(t.kind, Kind::Space | Kind::Comment))
    }

    fn next_sig(&self, mut i: usize) -> Option<usize> {
        while i < self.toks.len() {
            if self.is_code(i) {
                return Some(i);
            }
            i += 1;
        }
        None
    }

    fn prev_sig(&self, i: usize) -> Option<usize> {
        (0..i).rev().find(|&k| self.is_code(k))
    }

    fn note(
        &mut self,
        i: usize,
        severity: Severity,
        message: impl Into<String>,
        step: u8,
        rewrite: bool,
    ) {
        let line = self.toks[i].line;
        self.findings.push(Finding {
            diag: diag(severity, line, message, step),
            rewrite,
        });
    }

    /// Marks pointer parameters of kernel functions: CUDA ones lacking an
    /// address qualifier, OpenCL `__global` qualifiers to drop.
    fn scan_kernel_params(&mut self) {
        let marker = match self.dir {
            Direction::ToOpenCl => "__global__",
            Direction::ToCuda => "__kernel",
        };
        let mut i = 0;
        while i < self.toks.len() {
            if !(self.toks[i].kind == Kind::Ident && self.toks[i].text == marker) {
                i += 1;
                continue;
            }
            // parameter list: first `(` before any `;` or `{`
            let mut k = i + 1;
            while k < self.toks.len() && !matches!(self.text(k), "(" | ";" | "{") {
                k += 1;
            }
            if self.text(k) != "(" {
                i = k;
                continue;
            }
            let mut depth = 0;
            let mut param_start = k + 1;
            let mut j = k;
            while j < self.toks.len() {
                match self.text(j) {
                    "(" if self.is_code(j) => depth += 1,
                    ")" | "," if self.is_code(j) && depth == 1 => {
                        self.mark_param(param_start, j);
                        param_start = j + 1;
                        if self.text(j) == ")" {
                            break;
                        }
                    }
                    ")" if self.is_code(j) => depth -= 1,
                    _ => {}
                }
                j += 1;
            }
            i = j + 1;
        }
    }

    fn mark_param(&mut self, from: usize, to: usize) {
        let Some(first) = self.next_sig(from).filter(|&f| f < to) else {
            return;
        };
        let code: Vec<usize> = (first..to).filter(|&k| self.is_code(k)).collect();
        let pointer = code.iter().any(|&k| self.text(k) == "*");
        match self.dir {
            Direction::ToOpenCl => {
                let qualified = code
                    .iter()
                    .any(|&k| ADDRESS_QUALIFIERS.contains(&self.text(k)));
                if pointer && !qualified {
                    self.insert_global[first] = true;
                }
            }
            Direction::ToCuda => {
                for &k in &code {
                    if matches!(self.text(k), "__global" | "global") {
                        self.param_global[k] = true;
                    }
                }
            }
        }
    }

    /// Whether a compound index expression can stand without parentheses
    /// between tokens `before` and `after`.
    fn bare_ok(&self, before: Option<usize>, after: Option<usize>) -> bool {
        let prev_ok = before.is_none_or(|p| {
            let t = self.text(p);
            match self.toks[p].kind {
                Kind::Ident => t == "return",
                Kind::Number | Kind::Str => false,
                _ => !matches!(
                    t,
                    ")" | "]" | "*" | "/" | "%" | "-" | "." | "!" | "~" | "&" | ">" | "<"
                ),
            }
        });
        let next_ok =
            after.is_none_or(|n| !matches!(self.text(n), "*" | "/" | "%" | "." | "[" | "("));
        // `a->b`, `a<b` and shifts never sit next to these expressions in practice;
        // `<` and `>` are rejected above so `<<`/`>>` neighbours stay parenthesised
        prev_ok && next_ok
    }

    /// Matches adjacent tokens against `pattern` (identifier and punctuation
    /// texts, `D` for a dimension letter); returns the dimension and length.
    fn match_compact(&self, i: usize, pattern: &[&str]) -> Option<(usize, usize)> {
        let mut dim = None;
        for (k, p) in pattern.iter().enumerate() {
            let t = self.toks.get(i + k)?;
            if *p == "D" {
                let d = dim_index(t.text).filter(|_| t.kind == Kind::Ident)?;
                if dim.is_some_and(|x| x != d) {
                    return None;
                }
                dim = Some(d);
            } else if t.text != *p {
                return None;
            }
        }
        Some((dim?, pattern.len()))
    }

    /// Parses `name(arg)` starting at `i`, allowing whitespace; returns the
    /// argument text (trimmed) and the index after `)`.
    fn call_args(&self, i: usize) -> Option<(String, usize)> {
        let open = self.next_sig(i + 1).filter(|&k| self.text(k) == "(")?;
        let mut depth = 0;
        let mut arg = String::new();
        for k in open..self.toks.len() {
            match self.text(k) {
                "(" if self.is_code(k) => {
                    depth += 1;
                    if depth == 1 {
                        continue;
                    }
                }
                ")" if self.is_code(k) => {
                    depth -= 1;
                    if depth == 0 {
                        return Some((arg.trim().to_string(), k + 1));
                    }
                }
                _ => {}
            }
            arg.push_str(self.text(k));
        }
        None
    }

    fn run(mut self) -> (String, Vec<Finding>, bool, bool) {
        let mut i = 0;
        while i < self.toks.len() {
            if self.insert_global[i] {
                self.out.push_str("__global ");
                self.note(
                    i,
                    Severity::Info,
                    "kernel pointer argument qualified with __global",
                    5,
                    true,
                );
            }
            let tok = self.toks[i];
            i = match tok.kind {
                Kind::Ident => match self.dir {
                    Direction::ToOpenCl => self.to_opencl(i),
                    Direction::ToCuda => self.to_cuda(i),
                },
                Kind::Punct
                    if tok.text == "<" && self.text(i + 1) == "<" && self.text(i + 2) == "<" =>
                {
                    self.uses_launch_api = true;
                    self.note(
                        i,
                        Severity::Info,
                        "kernel<<<...>>>() launches become clEnqueueNDRangeKernel() calls",
                        2,
                        false,
                    );
                    self.out.push_str("<<<");
                    i + 3
                }
                _ => {
                    self.out.push_str(tok.text);
                    i + 1
                }
            };
        }
        (
            self.out,
            self.findings,
            self.uses_indexing,
            self.uses_launch_api,
        )
    }

    fn emit(&mut self, s: &str, i: usize, consumed: usize) -> usize {
        self.out.push_str(s);
        i + consumed
    }

    fn to_opencl(&mut self, i: usize) -> usize {
        let t = self.text(i);
        if let Some(&(_, cl)) = KEYWORDS.iter().find(|(c, _)| *c == t) {
            self.note(i, Severity::Info, format!("{t} -> {cl}"), 5, true);
            return self.emit(cl, i, 1);
        }
        const GLOBAL_ID: [&str; 11] = [
            "blockIdx",
            ".",
            "D",
            "*",
            "blockDim",
            ".",
            "D",
            "+",
            "threadIdx",
            ".",
            "D",
        ];
        const GLOBAL_SIZE: [&str; 7] = ["gridDim", ".", "D", "*", "blockDim", ".", "D"];
        for (pattern, name) in [
            (&GLOBAL_ID[..], "get_global_id"),
            (&GLOBAL_SIZE[..], "get_global_size"),
        ] {
            if let Some((d, len)) = self.match_compact(i, pattern) {
                let (before, after) = (self.prev_sig(i), self.next_sig(i + len));
                let wrapped = before.is_some_and(|b| self.text(b) == "(")
                    && after.is_some_and(|a| self.text(a) == ")");
                let outer_bare = wrapped
                    && self.bare_ok(
                        before.and_then(|b| self.prev_sig(b)),
                        after.and_then(|a| self.next_sig(a + 1)),
                    );
                let call = format!("{name}({d})");
                self.uses_indexing = true;
                if wrapped && !outer_bare && before == Some(i - 1) && after == Some(i + len) {
                    // the parentheses only guarded precedence; the call needs none
                    self.out.truncate(self.out.len() - 1);
                    self.note(
                        i,
                        Severity::Info,
                        format!("{} -> {call}", pattern.concat().replace('D', dim_name(d))),
                        4,
                        true,
                    );
                    return self.emit(&call, i, len + 1);
                }
                if wrapped || self.bare_ok(before, after) {
                    self.note(
                        i,
                        Severity::Info,
                        format!("{} -> {call}", pattern.concat().replace('D', dim_name(d))),
                        4,
                        true,
                    );
                    return self.emit(&call, i, len);
                }
            }
        }
        if let Some(&(_, f)) = INDEX_VARS.iter().find(|(c, _)| *c == t) {
            self.uses_indexing = true;
            if let Some((d, len)) = self.match_compact(i, &[t, ".", "D"]) {
                self.note(
                    i,
                    Severity::Info,
                    format!("{t}.{} -> {f}({d})", dim_name(d)),
                    4,
                    true,
                );
                return self.emit(&format!("{f}({d})"), i, len);
            }
            self.note(
                i,
                Severity::Warning,
                format!("{t} used without a .x/.y/.z component"),
                4,
                false,
            );
            return self.emit(t, i, 1);
        }
        match t {
            "__syncthreads" | "__threadfence_block" => {
                let target = if t == "__syncthreads" {
                    "barrier"
                } else {
                    "mem_fence"
                };
                match self.call_args(i) {
                    Some((arg, end)) if arg.is_empty() => {
                        self.note(
                            i,
                            Severity::Info,
                            format!("{t}() -> {target}(CLK_LOCAL_MEM_FENCE)"),
                            5,
                            true,
                        );
                        self.emit(&format!("{target}(CLK_LOCAL_MEM_FENCE)"), i, end - i)
                    }
                    _ => {
                        self.note(
                            i,
                            Severity::Warning,
                            format!("{t} not called as {t}()"),
                            5,
                            false,
                        );
                        self.emit(t, i, 1)
                    }
                }
            }
            "__threadfence" => {
                self.note(
                    i,
                    Severity::Warning,
                    "__threadfence() has no OpenCL equivalent",
                    5,
                    false,
                );
                self.emit(t, i, 1)
            }
            "__device__" => self.device_qualifier(i),
            "template" => {
                self.note(
                    i,
                    Severity::Warning,
                    "templates are not supported in OpenCL C kernels",
                    5,
                    false,
                );
                self.emit(t, i, 1)
            }
            _ if CUDA_BUILTINS.contains(&t) || is_make_vector(t) => {
                self.note(
                    i,
                    Severity::Warning,
                    format!("built-in {t} differs in OpenCL; find a substitute"),
                    5,
                    false,
                );
                self.emit(t, i, 1)
            }
            "cudaGetDeviceProperties" => {
                self.uses_launch_api = true;
                self.note(
                    i,
                    Severity::Info,
                    "cudaGetDeviceProperties() corresponds to clGetDeviceInfo()",
                    2,
                    false,
                );
                self.emit(t, i, 1)
            }
            _ => self.emit(t, i, 1),
        }
    }

    /// `__device__` on a function is dropped; on a variable it becomes `__global`.
    fn device_qualifier(&mut self, i: usize) -> usize {
        let mut k = i + 1;
        while k < self.toks.len() && !matches!(self.text(k), "(" | ";" | "=" | "{") {
            k += 1;
        }
        if self.text(k) == "(" {
            self.note(
                i,
                Severity::Info,
                "__device__ function qualifier removed; OpenCL has none",
                5,
                true,
            );
            let skip = if self.toks.get(i + 1).is_some_and(|t| t.kind == Kind::Space) {
                2
            } else {
                1
            };
            i + skip
        } else {
            self.note(
                i,
                Severity::Warning,
                "__device__ variable mapped to __global; program-scope globals need OpenCL 2.0",
                5,
                false,
            );
            self.emit("__global", i, 1)
        }
    }

    fn to_cuda(&mut self, i: usize) -> usize {
        let t = self.text(i);
        if let Some(&(cu, _)) = KEYWORDS.iter().find(|(_, c)| *c == t) {
            self.note(i, Severity::Info, format!("{t} -> {cu}"), 5, true);
            return self.emit(cu, i, 1);
        }
        if matches!(t, "__global" | "global") {
            let param = self.param_global[i];
            if !param && t == "global" {
                return self.emit(t, i, 1);
            }
            if param {
                self.note(
                    i,
                    Severity::Info,
                    format!("{t} qualifier dropped from kernel argument"),
                    5,
                    true,
                );
            } else {
                self.note(
                    i,
                    Severity::Info,
                    format!("{t} qualifier dropped; CUDA pointers carry no address space"),
                    5,
                    false,
                );
            }
            let skip = if self.toks.get(i + 1).is_some_and(|t| t.kind == Kind::Space) {
                2
            } else {
                1
            };
            return i + skip;
        }
        let index_fn = INDEX_VARS.iter().find(|(_, f)| *f == t).map(|&(v, _)| v);
        if index_fn.is_some() || matches!(t, "get_global_id" | "get_global_size") {
            self.uses_indexing = true;
            let Some((arg, end)) = self.call_args(i) else {
                self.note(i, Severity::Error, format!("{t} is not called"), 4, false);
                return self.emit(t, i, 1);
            };
            let Some(d) = arg.parse::<usize>().ok().filter(|&d| d < 3) else {
                self.note(
                    i,
                    Severity::Error,
                    format!("{t}({arg}): only the literal dimensions 0, 1 and 2 can be mapped"),
                    4,
                    false,
                );
                return self.emit(t, i, 1);
            };
            let dn = dim_name(d);
            let (expr, compound) = match (index_fn, t) {
                (Some(v), _) => (format!("{v}.{dn}"), false),
                (None, "get_global_id") => {
                    (format!("blockIdx.{dn}*blockDim.{dn}+threadIdx.{dn}"), true)
                }
                _ => (format!("gridDim.{dn}*blockDim.{dn}"), true),
            };
            self.note(i, Severity::Info, format!("{t}({d}) -> {expr}"), 4, true);
            let wrap = compound && !self.bare_ok(self.prev_sig(i), self.next_sig(end));
            let expr = if wrap { format!("({expr})") } else { expr };
            return self.emit(&expr, i, end - i);
        }
        match t {
            "barrier" | "mem_fence" => {
                let target = if t == "barrier" {
                    "__syncthreads()"
                } else {
                    "__threadfence_block()"
                };
                let Some((arg, end)) = self.call_args(i) else {
                    return self.emit(t, i, 1);
                };
                if arg == "CLK_LOCAL_MEM_FENCE" {
                    self.note(
                        i,
                        Severity::Info,
                        format!("{t}({arg}) -> {target}"),
                        5,
                        true,
                    );
                } else {
                    self.note(
                        i,
                        Severity::Info,
                        format!("{t}({arg}) mapped to {target}; fence scope narrowed to the block"),
                        5,
                        false,
                    );
                }
                self.emit(target, i, end - i)
            }
            _ if OPENCL_NO_EQUIVALENT.contains(&t) => {
                self.note(
                    i,
                    Severity::Warning,
                    format!("{t}() has no CUDA equivalent"),
                    4,
                    false,
                );
                self.emit(t, i, 1)
            }
            _ if OPENCL_PREFIXES.iter().any(|p| t.starts_with(p))
                && self.next_sig(i + 1).is_some_and(|k| self.text(k) == "(") =>
            {
                self.note(
                    i,
                    Severity::Warning,
                    format!("built-in {t} differs in CUDA; find a substitute"),
                    5,
                    false,
                );
                self.emit(t, i, 1)
            }
            _ if is_vector_type(t) && self.is_vector_literal(i) => {
                self.note(
                    i,
                    Severity::Warning,
                    format!("vector literal ({t})(...) has no CUDA syntax; use make_{t}"),
                    5,
                    false,
                );
                self.emit(t, i, 1)
            }
            "clGetDeviceInfo" | "clEnqueueNDRangeKernel" => {
                self.uses_launch_api = true;
                self.note(
                    i,
                    Severity::Info,
                    format!("{t}() is host API; see the launch and device-query rows"),
                    2,
                    false,
                );
                self.emit(t, i, 1)
            }
            _ => self.emit(t, i, 1),
        }
    }

    fn is_vector_literal(&self, i: usize) -> bool {
        let (Some(p), Some(n)) = (self.prev_sig(i), self.next_sig(i + 1)) else {
            return false;
        };
        self.text(p) == "("
            && self.text(n) == ")"
            && self.next_sig(n + 1).is_some_and(|k| self.text(k) == "(")
    }
}

fn is_vector_type(t: &str) -> bool {
    let base = t.trim_end_matches(|c: char| c.is_ascii_digit());
    base.len() < t.len()
        && matches!(&t[base.len()..], "2" | "3" | "4" | "8" | "16")
        && matches!(
            base,
            "float"
                | "double"
                | "int"
                | "uint"
                | "char"
                | "uchar"
                | "short"
                | "ushort"
                | "long"
                | "ulong"
                | "half"
        )
}

fn is_make_vector(t: &str) -> bool {
    t.strip_prefix("make_").is_some_and(is_vector_type)
}

fn sort(diags: &mut [PortDiagnostic]) {
    diags.sort_by(|a, b| (a.line, a.step).cmp(&(b.line, b.step)));
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Translation {
    pub text: String,
    pub diagnostics: Vec<PortDiagnostic>,
}

impl Translation {
    pub fn max_severity(&self) -> Option<Severity> {
        self.diagnostics.iter().map(|d| d.severity).max()
    }

    /// 0 when clean, 1 with warnings, 2 with errors.
    pub fn exit_code(&self) -> i32 {
        match self.max_severity() {
            Some(Severity::Error) => 2,
            Some(Severity::Warning) => 1,
            _ => 0,
        }
    }
}

/// Rewrites `source` into the other dialect.
pub fn translate(source: &str, dir: Direction) -> Translation {
    let (text, findings, _, _) = Translator::new(source, dir).run();
    let mut diagnostics: Vec<PortDiagnostic> = findings
        .into_iter()
        .filter(|f| !f.rewrite)
        .map(|f| f.diag)
        .collect();
    sort(&mut diagnostics);
    Translation { text, diagnostics }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChecklistGroup {
    pub step: u8,
    pub title: &'static str,
    pub findings: Vec<PortDiagnostic>,
}

fn step_title(step: u8, dir: Direction) -> &'static str {
    match (step, dir) {
        (1, Direction::ToCuda) => "import the CUDA host bindings instead of the OpenCL ones",
        (1, Direction::ToOpenCl) => "import the OpenCL host bindings instead of the CUDA ones",
        (2, _) => "change host API calls, minding context and stream synchronisation",
        (3, _) => "adjust kernel launch parameters",
        (4, Direction::ToCuda) => "use CUDA indexing in the kernels",
        (4, Direction::ToOpenCl) => "use OpenCL work-item functions in the kernels",
        _ => "search and replace the remaining keywords",
    }
}

/// The applicable checklist steps for one kernel source, each with its
/// findings. Keyword replacement (step 5) always applies; indexing and
/// launch geometry only when the kernel indexes, host steps only when host
/// API use is visible.
pub fn checklist(source: &str, dir: Direction) -> Vec<ChecklistGroup> {
    let (_, findings, uses_indexing, uses_launch_api) = Translator::new(source, dir).run();
    let mut groups: Vec<ChecklistGroup> = Vec::new();
    let mut push = |step: u8| {
        groups.push(ChecklistGroup {
            step,
            title: step_title(step, dir),
            findings: Vec::new(),
        })
    };
    if uses_launch_api {
        push(1);
        push(2);
    }
    if uses_indexing {
        push(3);
        push(4);
    }
    push(5);
    let first_line = 1;
    for g in &mut groups {
        if g.step == 3 {
            let message = match dir {
                Direction::ToCuda => "block sizes must be 3D and the global size is given in blocks, not threads",
                Direction::ToOpenCl => "local sizes are per work-group and the global size is given in work-items, not blocks",
            };
            g.findings
                .push(diag(Severity::Info, first_line, message, 3));
        }
    }
    for f in findings {
        if let Some(g) = groups.iter_mut().find(|g| g.step == f.diag.step) {
            g.findings.push(f.diag);
        }
    }
    for g in &mut groups {
        sort(&mut g.findings);
    }
    groups
}

/// All checklist findings, sorted by line then step.
pub fn checklist_diagnostics(source: &str, dir: Direction) -> Vec<PortDiagnostic> {
    let mut all: Vec<PortDiagnostic> = checklist(source, dir)
        .into_iter()
        .flat_map(|g| g.findings)
        .collect();
    sort(&mut all);
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(s: &str) -> String {
        translate(s, Direction::ToOpenCl).text
    }

    fn cu(s: &str) -> String {
        translate(s, Direction::ToCuda).text
    }

    #[test]
    fn kernel_signature() {
        assert_eq!(
            cl("__global__ void f(float* p)"),
            "__kernel void f(__global float* p)"
        );
        assert_eq!(
            cu("__kernel void f(__global float* p)"),
            "__global__ void f(float* p)"
        );
        assert_eq!(
            cl("__global__ void f(const float* a, int n, __restrict__ float* b)"),
            "__kernel void f(__global const float* a, int n, __global restrict float* b)"
        );
    }

    #[test]
    fn global_size_needs_grid_times_block() {
        assert_eq!(cu("get_global_size(0)"), "gridDim.x*blockDim.x");
        assert_eq!(cl("gridDim.x*blockDim.x"), "get_global_size(0)");
    }

    #[test]
    fn indexing_terms() {
        assert_eq!(
            cl("int i = blockIdx.y*blockDim.y+threadIdx.y;"),
            "int i = get_global_id(1);"
        );
        assert_eq!(
            cl("int i = blockIdx.x * blockDim.x + threadIdx.x;"),
            "int i = get_group_id(0) * get_local_size(0) + get_local_id(0);"
        );
        assert_eq!(
            cu("int k = get_local_id(2) + get_num_groups(1);"),
            "int k = threadIdx.z + gridDim.y;"
        );
    }

    #[test]
    fn precedence_is_kept() {
        let src = "int a = 2*get_global_id(0);";
        let there = cu(src);
        assert_eq!(there, "int a = 2*(blockIdx.x*blockDim.x+threadIdx.x);");
        assert_eq!(cl(&there), src);
        // not a global id: the product binds tighter than the sum
        assert_eq!(
            cl("a = 2*blockIdx.x*blockDim.x+threadIdx.x;"),
            "a = 2*get_group_id(0)*get_local_size(0)+get_local_id(0);"
        );
    }

    #[test]
    fn threadfence_warns_and_stays() {
        let t = translate(
            "__global__ void k() {\n  __threadfence();\n}\n",
            Direction::ToOpenCl,
        );
        assert!(t.text.contains("__threadfence();"));
        let d = &t.diagnostics[0];
        assert_eq!((d.severity, d.line, d.step), (Severity::Warning, 2, 5));
        assert!(d.message.contains("no OpenCL equivalent"));
        assert_eq!(t.exit_code(), 1);
    }

    #[test]
    fn barrier_narrowing() {
        let t = translate("barrier(CLK_GLOBAL_MEM_FENCE);", Direction::ToCuda);
        assert_eq!(t.text, "__syncthreads();");
        assert_eq!(t.diagnostics[0].severity, Severity::Info);
        assert_eq!(cl("__syncthreads();"), "barrier(CLK_LOCAL_MEM_FENCE);");
        assert_eq!(
            cu("mem_fence(CLK_LOCAL_MEM_FENCE);"),
            "__threadfence_block();"
        );
    }

    #[test]
    fn device_functions_lose_qualifier() {
        let t = translate(
            "__device__ float sq(float x) { return x*x; }",
            Direction::ToOpenCl,
        );
        assert_eq!(t.text, "float sq(float x) { return x*x; }");
        assert!(t.diagnostics.is_empty());
    }

    #[test]
    fn comments_and_strings_untouched() {
        let src = "// __global__ blockIdx.x\nconst char* s = \"__syncthreads()\"; /* __shared__ */ char c = '_';";
        assert_eq!(cl(src), src);
    }

    #[test]
    fn dynamic_dimension_is_an_error() {
        let t = translate("int i = get_global_id(d);", Direction::ToCuda);
        assert_eq!(t.text, "int i = get_global_id(d);");
        assert_eq!(t.exit_code(), 2);
    }

    #[test]
    fn template_warning() {
        let t = translate(
            "template <typename T>\n__global__ void k(T* p) {}",
            Direction::ToOpenCl,
        );
        assert!(t
            .diagnostics
            .iter()
            .any(|d| d.severity == Severity::Warning && d.message.contains("template")));
    }

    #[test]
    fn shared_memory_finding_in_step_five() {
        let groups = checklist(
            "__global__ void k() { __shared__ float t[64]; t[0] = 1.0f; }",
            Direction::ToOpenCl,
        );
        let five = groups.iter().find(|g| g.step == 5).unwrap();
        assert!(five
            .findings
            .iter()
            .any(|d| d.message == "__shared__ -> __local"));
    }

    #[test]
    fn arithmetic_kernel_only_step_five() {
        let groups = checklist(
            "float add(float a, float b) { return a + b; }",
            Direction::ToOpenCl,
        );
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].step, 5);
        assert!(groups[0].findings.is_empty());
    }

    #[test]
    fn diagnostics_sorted() {
        let src = "__global__ void k(float* p) {\n  __threadfence();\n  p[blockIdx.x] = make_float2(0, 0).x;\n}\n";
        let all = checklist_diagnostics(src, Direction::ToOpenCl);
        assert!(all
            .windows(2)
            .all(|w| (w[0].line, w[0].step) <= (w[1].line, w[1].step)));
        let lines = src.lines().count();
        assert!(all.iter().all(|d| d.line >= 1 && d.line <= lines));
    }

    #[test]
    fn table_is_longest_first() {
        assert!(MAPPINGS
            .windows(2)
            .all(|w| w[0].cuda.len() >= w[1].cuda.len()));
        assert!(MAPPINGS
            .iter()
            .filter(|m| !m.bidirectional)
            .all(|m| !m.note.is_empty()));
    }

    #[test]
    fn render_format() {
        let d = diag(Severity::Warning, 3, "x", 5);
        assert_eq!(d.render("k.cu"), "k.cu:3: warning: x [step 5]");
    }
}
