//! Tool registry and coding tool profiles.
//!
//! A [`ToolRegistry`] fixes the ordered set of optional codec tools. A [`Ctp`]
//! is one bit per registry tool: set means the encoder may use the tool.
//!
//! Profiles have two text forms:
//!
//! * a hex mask of `ceil(N/4)` digits. The string is the hex numeral of the
//!   integer whose bit `i` is tool `i`, so bit 0 (the first registry tool) is
//!   the least significant bit of the last digit. With 30 tools all enabled
//!   this is `3FFFFFFF`.
//! * `off:` followed by a comma-separated list of disabled tool names. The
//!   empty list `off:` is the all-enabled profile.
//!
//! [`ToolRegistry::serialize_ctp`] always emits the uppercase hex form.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CtpError {
    #[error("tool index {index} out of range for registry of {size} tools")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("unknown tool name `{0}`")]
    UnknownTool(String),
    #[error("tool `{0}` listed more than once")]
    DuplicateTool(String),
    #[error("mask `{mask}` has {got} hex digits, expected {expected} for {size} tools")]
    WrongMaskLength {
        mask: String,
        got: usize,
        expected: usize,
        size: usize,
    },
    #[error("mask `{0}` is not a hex number")]
    InvalidMask(String),
    #[error("mask `{mask}` sets bits beyond the {size} registry tools")]
    MaskOverflow { mask: String, size: usize },
    #[error("profile `{0}` mixes the hex-mask and `off:` forms")]
    MixedForms(String),
    #[error("profile belongs to a different tool registry")]
    RegistryMismatch,
    #[error("registry line {line}: {msg}")]
    RegistrySyntax { line: usize, msg: String },
    #[error("registry is empty")]
    EmptyRegistry,
    #[error("registry I/O: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ToolCategory {
    Intra,
    Inter,
    TransformQuant,
    InLoopFilter,
    Other,
}

impl ToolCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ToolCategory::Intra => "Intra",
            ToolCategory::Inter => "Inter",
            ToolCategory::TransformQuant => "TransformQuant",
            ToolCategory::InLoopFilter => "InLoopFilter",
            ToolCategory::Other => "Other",
        }
    }
}

impl FromStr for ToolCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Intra" => ToolCategory::Intra,
            "Inter" => ToolCategory::Inter,
            "TransformQuant" => ToolCategory::TransformQuant,
            "InLoopFilter" => ToolCategory::InLoopFilter,
            "Other" => ToolCategory::Other,
            other => return Err(format!("unknown category `{other}`")),
        })
    }
}

impl fmt::Display for ToolCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolDescriptor {
    pub name: String,
    pub category: ToolCategory,
    pub default_enabled: bool,
}

impl ToolDescriptor {
    pub fn new(name: impl Into<String>, category: ToolCategory, default_enabled: bool) -> Self {
        Self {
            name: name.into(),
            category,
            default_enabled,
        }
    }
}

/// Short fingerprint of a registry's canonical text, carried by every [`Ctp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegistryId(u64);

/// The 30 tools of the shipped registry, in bit order.
const DEFAULT_TOOLS: [(&str, ToolCategory); 30] = [
    ("CCLM", ToolCategory::Intra),
    ("ISP", ToolCategory::Intra),
    ("MIP", ToolCategory::Intra),
    ("MRL", ToolCategory::Intra),
    ("AFFINE", ToolCategory::Inter),
    ("AMVR", ToolCategory::Inter),
    ("BCW", ToolCategory::Inter),
    ("BDOF", ToolCategory::Inter),
    ("CIIP", ToolCategory::Inter),
    ("DMVR", ToolCategory::Inter),
    ("GPM", ToolCategory::Inter),
    ("MMVD", ToolCategory::Inter),
    ("PROF", ToolCategory::Inter),
    ("SBTMVP", ToolCategory::Inter),
    ("SMVD", ToolCategory::Inter),
    ("DQ", ToolCategory::TransformQuant),
    ("JCCR", ToolCategory::TransformQuant),
    ("LFNST", ToolCategory::TransformQuant),
    ("MTS", ToolCategory::TransformQuant),
    ("SBT", ToolCategory::TransformQuant),
    ("TSRC", ToolCategory::TransformQuant),
    ("ALF", ToolCategory::InLoopFilter),
    ("CCALF", ToolCategory::InLoopFilter),
    ("DBF", ToolCategory::InLoopFilter),
    ("LMCS", ToolCategory::InLoopFilter),
    ("SAO", ToolCategory::InLoopFilter),
    ("BDPCM", ToolCategory::Other),
    ("IBC", ToolCategory::Other),
    ("CST", ToolCategory::Other),
    ("MCTF", ToolCategory::Other),
];

/// Ordered, immutable set of tools. A tool's index is its bit position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolRegistry {
    tools: Vec<ToolDescriptor>,
    id: RegistryId,
}

impl ToolRegistry {
    pub fn new(tools: Vec<ToolDescriptor>) -> Result<Self, CtpError> {
        if tools.is_empty() {
            return Err(CtpError::EmptyRegistry);
        }
        for (i, t) in tools.iter().enumerate() {
            if !is_valid_name(&t.name) {
                return Err(CtpError::RegistrySyntax {
                    line: i + 1,
                    msg: format!("invalid tool name `{}`", t.name),
                });
            }
            if tools[..i].iter().any(|o| o.name == t.name) {
                return Err(CtpError::DuplicateTool(t.name.clone()));
            }
        }
        let mut reg = Self {
            tools,
            id: RegistryId(0),
        };
        let digest = Sha256::digest(reg.to_canonical_string().as_bytes());
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        reg.id = RegistryId(u64::from_be_bytes(head));
        Ok(reg)
    }

    /// The shipped 30-tool registry. Every tool is default-enabled; this is
    /// an approximation of the reference encoder preset and can be replaced
    /// by loading a registry file.
    pub fn vvc_default() -> Self {
        let tools = DEFAULT_TOOLS
            .iter()
            .map(|(n, c)| ToolDescriptor::new(*n, *c, true))
            .collect();
        Self::new(tools).expect("built-in registry is valid")
    }

    /// Parses the line-oriented registry format: `name,category,default(0|1)`
    /// per line, `#` starts a comment line, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, CtpError> {
        let mut tools = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let syntax = |msg: String| CtpError::RegistrySyntax { line: line_no, msg };
            if fields.len() != 3 {
                return Err(syntax(format!("expected 3 fields, found {}", fields.len())));
            }
            let category = fields[1].parse::<ToolCategory>().map_err(syntax)?;
            let default_enabled = match fields[2] {
                "0" => false,
                "1" => true,
                other => return Err(syntax(format!("default must be 0 or 1, found `{other}`"))),
            };
            if !is_valid_name(fields[0]) {
                return Err(syntax(format!("invalid tool name `{}`", fields[0])));
            }
            if tools.iter().any(|t: &ToolDescriptor| t.name == fields[0]) {
                return Err(CtpError::DuplicateTool(fields[0].to_string()));
            }
            tools.push(ToolDescriptor::new(fields[0], category, default_enabled));
        }
        Self::new(tools)
    }

    pub fn load(path: &Path) -> Result<Self, CtpError> {
        let text = fs::read_to_string(path).map_err(|e| CtpError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), CtpError> {
        fs::write(path, self.to_canonical_string()).map_err(|e| CtpError::Io(format!("{}: {e}", path.display())))
    }

    /// Canonical text: one `name,category,default` line per tool, no comments.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        for t in &self.tools {
            out.push_str(&format!("{},{},{}\n", t.name, t.category, u8::from(t.default_enabled)));
        }
        out
    }

    /// Hex SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        hex_digest(self.to_canonical_string().as_bytes())
    }

    pub fn id(&self) -> RegistryId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn tools(&self) -> &[ToolDescriptor] {
        &self.tools
    }

    pub fn tool(&self, index: usize) -> Option<&ToolDescriptor> {
        self.tools.get(index)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.tools.iter().position(|t| t.name == name)
    }

    /// Number of hex digits in a mask for this registry.
    pub fn mask_digits(&self) -> usize {
        self.tools.len().div_ceil(4)
    }

    /// Profile with every bit set to the tool's default flag (the anchor).
    pub fn default_ctp(&self) -> Ctp {
        Ctp {
            registry: self.id,
            bits: self.tools.iter().map(|t| t.default_enabled).collect(),
        }
    }

    /// Profile from explicit bits; length must match.
    pub fn ctp_from_bits(&self, bits: &[bool]) -> Result<Ctp, CtpError> {
        if bits.len() != self.len() {
            return Err(CtpError::IndexOutOfRange {
                index: bits.len(),
                size: self.len(),
            });
        }
        Ok(Ctp {
            registry: self.id,
            bits: bits.into(),
        })
    }

    pub fn flip_tool(&self, ctp: &Ctp, index: usize) -> Result<Ctp, CtpError> {
        self.check(ctp)?;
        ctp.flip(index)
    }

    pub fn parse_ctp(&self, text: &str) -> Result<Ctp, CtpError> {
        let text = text.trim();
        if let Some(list) = text.strip_prefix("off:") {
            if list.contains("off:") {
                return Err(CtpError::MixedForms(text.to_string()));
            }
            let mut ctp = Ctp {
                registry: self.id,
                bits: vec![true; self.len()].into(),
            };
            let mut seen = Vec::new();
            for name in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                let idx = match self.index_of(name) {
                    Some(i) => i,
                    None if is_hex(name) && name.len() == self.mask_digits() => {
                        return Err(CtpError::MixedForms(text.to_string()))
                    }
                    None => return Err(CtpError::UnknownTool(name.to_string())),
                };
                if seen.contains(&idx) {
                    return Err(CtpError::DuplicateTool(name.to_string()));
                }
                seen.push(idx);
                ctp.bits[idx] = false;
            }
            return Ok(ctp);
        }
        if text.contains("off:") || text.contains(',') {
            return Err(CtpError::MixedForms(text.to_string()));
        }
        self.parse_hex(text)
    }

    fn parse_hex(&self, text: &str) -> Result<Ctp, CtpError> {
        if text.is_empty() || !is_hex(text) {
            return Err(CtpError::InvalidMask(text.to_string()));
        }
        let expected = self.mask_digits();
        if text.len() != expected {
            return Err(CtpError::WrongMaskLength {
                mask: text.to_string(),
                got: text.len(),
                expected,
                size: self.len(),
            });
        }
        let n = self.len();
        let mut bits = vec![false; n];
        // Last digit holds bits 0..4.
        for (pos, ch) in text.chars().rev().enumerate() {
            let nibble = ch.to_digit(16).expect("checked hex") as usize;
            for k in 0..4 {
                if nibble & (1 << k) == 0 {
                    continue;
                }
                let bit = pos * 4 + k;
                if bit >= n {
                    return Err(CtpError::MaskOverflow {
                        mask: text.to_string(),
                        size: n,
                    });
                }
                bits[bit] = true;
            }
        }
        Ok(Ctp {
            registry: self.id,
            bits: bits.into(),
        })
    }

    /// Canonical hex mask of `ctp`.
    pub fn serialize_ctp(&self, ctp: &Ctp) -> Result<String, CtpError> {
        self.check(ctp)?;
        Ok(ctp.to_hex())
    }

    /// `off:`-form listing the disabled tools in registry order.
    pub fn describe_off(&self, ctp: &Ctp) -> Result<String, CtpError> {
        self.check(ctp)?;
        let off: Vec<&str> = self
            .tools
            .iter()
            .zip(ctp.bits.iter())
            .filter(|(_, on)| !**on)
            .map(|(t, _)| t.name.as_str())
            .collect();
        Ok(format!("off:{}", off.join(",")))
    }

    fn check(&self, ctp: &Ctp) -> Result<(), CtpError> {
        if ctp.registry != self.id || ctp.bits.len() != self.len() {
            return Err(CtpError::RegistryMismatch);
        }
        Ok(())
    }
}

impl Default for ToolRegistry {
    fn default() -> Self {
        Self::vvc_default()
    }
}

/// Coding tool profile: one usage bit per registry tool.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ctp {
    registry: RegistryId,
    bits: Box<[bool]>,
}

impl Ctp {
    pub fn registry_id(&self) -> RegistryId {
        self.registry
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_enabled(&self, index: usize) -> bool {
        self.bits.get(index).copied().unwrap_or(false)
    }

    pub fn enabled(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    /// Copy of `self` with tool `index` toggled.
    pub fn flip(&self, index: usize) -> Result<Ctp, CtpError> {
        if index >= self.bits.len() {
            return Err(CtpError::IndexOutOfRange {
                index,
                size: self.bits.len(),
            });
        }
        let mut out = self.clone();
        out.bits[index] = !out.bits[index];
        Ok(out)
    }

    pub fn hamming(&self, other: &Ctp) -> usize {
        self.bits.iter().zip(other.bits.iter()).filter(|(a, b)| a != b).count()
    }

    pub fn to_hex(&self) -> String {
        let digits = self.bits.len().div_ceil(4);
        let mut out = String::with_capacity(digits);
        for pos in (0..digits).rev() {
            let mut nibble = 0u32;
            for k in 0..4 {
                if self.bits.get(pos * 4 + k).copied().unwrap_or(false) {
                    nibble |= 1 << k;
                }
            }
            out.push(char::from_digit(nibble, 16).unwrap().to_ascii_uppercase());
        }
        out
    }
}

impl fmt::Display for Ctp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Ctp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn is_hex(s: &str) -> bool {
    s.chars().all(|c| c.is_ascii_hexdigit())
}

fn is_valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}
