//! Reversible mass-action reaction networks and their text DSL.
//!
//! Grammar (one statement per line, `#` starts a comment):
//!
//! ```text
//! species NAME [diffusion=REAL] [environment]
//! REACTANTS ('->' | '<->') PRODUCTS '@' name=value (',' name=value)*
//! ```
//!
//! where a side is `k Species ('+' k Species)*` with `k` an optional positive
//! integer (default 1). A reversible reaction takes two named rates (forward
//! then backward); an irreversible one takes a single forward rate and is
//! stored as a reversible reaction with zero backward rate. Stoichiometric
//! coefficients are integers only.

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Whether a species takes part in the dynamics or stands for a large
/// environment reservoir. Parsing treats both identically; model assembly
/// decides whether environment species are frozen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeciesRole {
    Dynamic,
    Environment,
}

/// A chemical species with an optional diffusion coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub name: String,
    pub diffusion: f64,
    pub role: SpeciesRole,
}

/// One reversible reaction. Species are referenced by index into the owning
/// network; counts are positive integers.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    pub k_forward: f64,
    pub k_backward: f64,
    /// Rate names from the DSL, kept for pretty-printing.
    pub forward_label: String,
    pub backward_label: Option<String>,
}

/// A reaction network with its stoichiometric matrix
/// (rows = reactions, columns = species, entry = product count - reactant count).
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    sigma: Vec<i64>,
}

/// Incremental construction used by the parser and the model assembly code.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a species explicitly; errors on duplicates.
    pub fn declare_species(&mut self, name: &str, diffusion: f64, role: SpeciesRole) -> Result<usize> {
        if self.species.iter().any(|s| s.name == name) {
            return Err(Error::Network(format!("duplicate species declaration: {name}")));
        }
        if !(diffusion >= 0.0) {
            return Err(Error::Network(format!(
                "diffusion coefficient of {name} must be nonnegative, got {diffusion}"
            )));
        }
        self.species.push(Species {
            name: name.to_string(),
            diffusion,
            role,
        });
        Ok(self.species.len() - 1)
    }

    /// Returns the index of `name`, creating an implicit dynamic species with
    /// zero diffusion on first appearance.
    pub fn species_index(&mut self, name: &str) -> usize {
        if let Some(i) = self.species.iter().position(|s| s.name == name) {
            return i;
        }
        self.species.push(Species {
            name: name.to_string(),
            diffusion: 0.0,
            role: SpeciesRole::Dynamic,
        });
        self.species.len() - 1
    }

    pub fn add_reaction(&mut self, reaction: Reaction) -> Result<()> {
        if reaction.reactants.is_empty() && reaction.products.is_empty() {
            return Err(Error::Network("reaction needs at least one reactant or product".into()));
        }
        for &(idx, count) in reaction.reactants.iter().chain(&reaction.products) {
            if idx >= self.species.len() {
                return Err(Error::Network(format!("species index {idx} out of range")));
            }
            if count == 0 {
                return Err(Error::Network("stoichiometric counts must be >= 1".into()));
            }
        }
        if !(reaction.k_forward >= 0.0) || !(reaction.k_backward >= 0.0) {
            return Err(Error::Network("rates must be nonnegative".into()));
        }
        self.reactions.push(reaction);
        Ok(())
    }

    pub fn build(self) -> Result<ReactionNetwork> {
        let ns = self.species.len();
        let mut sigma = vec![0i64; self.reactions.len() * ns];
        for (i, r) in self.reactions.iter().enumerate() {
            for &(alpha, count) in &r.products {
                sigma[i * ns + alpha] += count as i64;
            }
            for &(alpha, count) in &r.reactants {
                sigma[i * ns + alpha] -= count as i64;
            }
        }
        Ok(ReactionNetwork {
            species: self.species,
            reactions: self.reactions,
            sigma,
        })
    }
}

impl ReactionNetwork {
    /// Parses DSL source. Species appear in first-appearance order,
    /// reactions in source order.
    pub fn parse(text: &str) -> Result<Self> {
        parse_network(text)
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    /// Stoichiometric entry for reaction `i`, species `alpha`.
    pub fn sigma(&self, i: usize, alpha: usize) -> i64 {
        self.sigma[i * self.species.len() + alpha]
    }

    /// Forward and backward mass-action fluxes `(R+, R-)` at concentrations `c`.
    pub fn fluxes(&self, c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_concentrations(c)?;
        let mut fwd = Vec::with_capacity(self.reactions.len());
        let mut bwd = Vec::with_capacity(self.reactions.len());
        for r in &self.reactions {
            fwd.push(r.k_forward * monomial(c, &r.reactants));
            bwd.push(r.k_backward * monomial(c, &r.products));
        }
        Ok((fwd, bwd))
    }

    /// Net mass-action rates `R+ - R-` at concentrations `c`.
    pub fn mass_action_rates(&self, c: &[f64]) -> Result<Vec<f64>> {
        let (fwd, bwd) = self.fluxes(c)?;
        Ok(fwd.iter().zip(&bwd).map(|(f, b)| f - b).collect())
    }

    /// Net rates written into `out` with no sign checks and no allocation.
    /// The integrator uses this to probe slightly negative trial states; the
    /// polynomials extend smoothly there.
    pub(crate) fn rates_unchecked(&self, c: &[f64], out: &mut [f64]) {
        for (r, slot) in self.reactions.iter().zip(out.iter_mut()) {
            *slot = r.k_forward * monomial(c, &r.reactants) - r.k_backward * monomial(c, &r.products);
        }
    }

    /// Applies the transposed stoichiometric matrix to a rate vector.
    pub fn apply_stoichiometry(&self, rates: &[f64]) -> Result<Vec<f64>> {
        if rates.len() != self.reactions.len() {
            return Err(Error::mismatch(format!(
                "rate vector has {} entries, network has {} reactions",
                rates.len(),
                self.reactions.len()
            )));
        }
        let ns = self.species.len();
        let mut out = vec![0.0; ns];
        for (i, &rate) in rates.iter().enumerate() {
            for alpha in 0..ns {
                let s = self.sigma[i * ns + alpha];
                if s != 0 {
                    out[alpha] += s as f64 * rate;
                }
            }
        }
        Ok(out)
    }

    /// Per-species reaction source `sigma^T Rdot` at concentrations `c`.
    pub fn reaction_rhs(&self, c: &[f64]) -> Result<Vec<f64>> {
        let rates = self.mass_action_rates(c)?;
        self.apply_stoichiometry(&rates)
    }

    /// Basis of the conserved moieties: rational vectors `y` with
    /// `sum_alpha y_alpha * sigma_{i,alpha} = 0` for every reaction `i`.
    /// With no reactions this is the full species space.
    pub fn conserved_moieties(&self) -> Vec<Vec<Ratio<i64>>> {
        nullspace_rational(&self.sigma, self.reactions.len(), self.species.len())
    }

    /// Canonical DSL text; `parse(to_dsl())` reproduces the network.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for s in &self.species {
            out.push_str(&format!("species {} diffusion={}", s.name, s.diffusion));
            if s.role == SpeciesRole::Environment {
                out.push_str(" environment");
            }
            out.push('\n');
        }
        for r in &self.reactions {
            let side = |terms: &[(usize, u32)]| {
                terms
                    .iter()
                    .map(|&(idx, count)| {
                        if count == 1 {
                            self.species[idx].name.clone()
                        } else {
                            format!("{count} {}", self.species[idx].name)
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" + ")
            };
            match &r.backward_label {
                Some(bl) => out.push_str(&format!(
                    "{} <-> {} @ {}={}, {}={}\n",
                    side(&r.reactants),
                    side(&r.products),
                    r.forward_label,
                    r.k_forward,
                    bl,
                    r.k_backward
                )),
                None => out.push_str(&format!(
                    "{} -> {} @ {}={}\n",
                    side(&r.reactants),
                    side(&r.products),
                    r.forward_label,
                    r.k_forward
                )),
            }
        }
        out
    }

    fn check_concentrations(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.species.len() {
            return Err(Error::mismatch(format!(
                "concentration vector has {} entries, network has {} species",
                c.len(),
                self.species.len()
            )));
        }
        if let Some(v) = c.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::invalid(format!("negative concentration {v}")));
        }
        Ok(())
    }
}

fn monomial(c: &[f64], terms: &[(usize, u32)]) -> f64 {
    let mut acc = 1.0;
    for &(idx, count) in terms {
        acc *= c[idx].powi(count as i32);
    }
    acc
}

// ---------------------------------------------------------------------------
// Rational null space
// ---------------------------------------------------------------------------

/// Null space of the (rows x cols) integer matrix over the rationals,
/// canonicalized to integer vectors with positive leading entry and gcd 1.
fn nullspace_rational(m: &[i64], rows: usize, cols: usize) -> Vec<Vec<Ratio<i64>>> {
    let mut a: Vec<Vec<Ratio<i64>>> = (0..rows)
        .map(|i| (0..cols).map(|j| Ratio::from_integer(m[i * cols + j])).collect())
        .collect();
    let zero = Ratio::from_integer(0);
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&r| a[r][col] != zero) else {
            continue;
        };
        a.swap(row, p);
        let inv = a[row][col];
        for j in col..cols {
            a[row][j] /= inv;
        }
        for r in 0..rows {
            if r != row && a[r][col] != zero {
                let factor = a[r][col];
                for j in col..cols {
                    let s = a[row][j];
                    a[r][j] -= factor * s;
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut y = vec![zero; cols];
        y[free] = Ratio::from_integer(1);
        for (r, &pc) in pivot_cols.iter().enumerate() {
            y[pc] = -a[r][free];
        }
        canonicalize(&mut y);
        basis.push(y);
    }
    basis
}

fn canonicalize(y: &mut [Ratio<i64>]) {
    let mut lcm: i64 = 1;
    for v in y.iter() {
        lcm = lcm / gcd(lcm, *v.denom()) * *v.denom();
    }
    let mut g: i64 = 0;
    for v in y.iter_mut() {
        *v *= Ratio::from_integer(lcm);
        g = gcd(g, *v.numer());
    }
    if g > 1 {
        for v in y.iter_mut() {
            *v /= Ratio::from_integer(g);
        }
    }
    if let Some(first) = y.iter().find(|v| **v != Ratio::from_integer(0)) {
        if *first.numer() < 0 {
            for v in y.iter_mut() {
                *v = -*v;
            }
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Plus,
    Arrow { reversible: bool },
    At,
    Comma,
    Eq,
}

struct Token {
    tok: Tok,
    col: usize,
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>> {
    let bytes: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '+' {
            toks.push(Token { tok: Tok::Plus, col });
            i += 1;
        } else if c == '@' {
            toks.push(Token { tok: Tok::At, col });
            i += 1;
        } else if c == ',' {
            toks.push(Token { tok: Tok::Comma, col });
            i += 1;
        } else if c == '=' {
            toks.push(Token { tok: Tok::Eq, col });
            i += 1;
        } else if c == '<' {
            if bytes[i..].iter().take(3).collect::<String>() == "<->" {
                toks.push(Token {
                    tok: Tok::Arrow { reversible: true },
                    col,
                });
                i += 3;
            } else {
                return Err(syntax(line_no, col, "expected '<->'"));
            }
        } else if c == '-' {
            if i + 1 < bytes.len() && bytes[i + 1] == '>' {
                toks.push(Token {
                    tok: Tok::Arrow { reversible: false },
                    col,
                });
                i += 2;
            } else if i + 1 < bytes.len() && (bytes[i + 1].is_ascii_digit() || bytes[i + 1] == '.') {
                let (num, len) = scan_number(&bytes[i..]);
                toks.push(Token { tok: Tok::Number(num), col });
                i += len;
            } else {
                return Err(syntax(line_no, col, "unexpected '-'"));
            }
        } else if c.is_ascii_digit() || c == '.' {
            let (num, len) = scan_number(&bytes[i..]);
            toks.push(Token { tok: Tok::Number(num), col });
            i += len;
        } else if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_alphanumeric() || bytes[j] == '_') {
                j += 1;
            }
            toks.push(Token {
                tok: Tok::Ident(bytes[i..j].iter().collect()),
                col,
            });
            i = j;
        } else {
            return Err(syntax(line_no, col, &format!("unexpected character '{c}'")));
        }
    }
    Ok(toks)
}

/// Scans a number starting at `chars[0]` (which may be '-').
fn scan_number(chars: &[char]) -> (String, usize) {
    let mut j = 0;
    if chars[0] == '-' {
        j = 1;
    }
    while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
        j += 1;
    }
    if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
        let mut k = j + 1;
        if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
            k += 1;
        }
        if k < chars.len() && chars[k].is_ascii_digit() {
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            j = k;
        }
    }
    (chars[..j].iter().collect(), j)
}

fn syntax(line: usize, col: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        column: col,
        message: msg.to_string(),
    }
}

struct LineParser<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|t| t.col)
            .unwrap_or_else(|| self.toks.last().map(|t| t.col + 1).unwrap_or(1))
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn expect_ident(&mut self, what: &str) -> Result<&'a str> {
        let (line, col) = (self.line, self.col());
        match self.next().map(|t| &t.tok) {
            Some(Tok::Ident(name)) => Ok(name),
            _ => Err(syntax(line, col, &format!("expected {what}"))),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let (line, col) = (self.line, self.col());
        match self.next() {
            Some(t) if t.tok == tok => Ok(()),
            _ => Err(syntax(line, col, &format!("expected {what}"))),
        }
    }

    /// One reaction side: `k Species ('+' k Species)*`, merged to a multiset.
    fn parse_side(&mut self, builder: &mut NetworkBuilder) -> Result<Vec<(usize, u32)>> {
        let mut terms: Vec<(usize, u32)> = Vec::new();
        loop {
            let count = match self.peek() {
                Some(Tok::Number(raw)) => {
                    let (line, col) = (self.line, self.col());
                    let raw = raw.clone();
                    self.next();
                    let n: u32 = raw.parse().map_err(|_| {
                        syntax(line, col, "stoichiometric coefficients must be positive integers")
                    })?;
                    if n == 0 {
                        return Err(syntax(line, col, "stoichiometric coefficients must be >= 1"));
                    }
                    n
                }
                _ => 1,
            };
            let name = self.expect_ident("species name")?;
            let idx = builder.species_index(name);
            match terms.iter_mut().find(|(i, _)| *i == idx) {
                Some((_, c)) => *c += count,
                None => terms.push((idx, count)),
            }
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                }
                _ => break,
            }
        }
        Ok(terms)
    }

    /// `name=value`; negative values are rejected with a dedicated message.
    fn parse_rate(&mut self) -> Result<(String, f64)> {
        let name = self.expect_ident("rate name")?.to_string();
        self.expect(Tok::Eq, "'='")?;
        let (line, col) = (self.line, self.col());
        match self.next().map(|t| &t.tok) {
            Some(Tok::Number(raw)) => {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| syntax(line, col, &format!("invalid rate literal '{raw}'")))?;
                if v < 0.0 {
                    return Err(syntax(line, col, &format!("negative rate literal '{raw}'")));
                }
                Ok((name, v))
            }
            _ => Err(syntax(line, col, "expected rate value")),
        }
    }
}

fn parse_network(text: &str) -> Result<ReactionNetwork> {
    let mut builder = NetworkBuilder::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = tokenize(raw_line, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = LineParser {
            toks: &toks,
            pos: 0,
            line: line_no,
        };
        if let Some(Tok::Ident(first)) = p.peek() {
            if first == "species" {
                p.next();
                let name = p.expect_ident("species name")?.to_string();
                let mut diffusion = 0.0;
                let mut role = SpeciesRole::Dynamic;
                while let Some(tok) = p.peek() {
                    match tok {
                        Tok::Ident(attr) if attr == "environment" => {
                            p.next();
                            role = SpeciesRole::Environment;
                        }
                        Tok::Ident(attr) if attr == "diffusion" => {
                            p.next();
                            p.expect(Tok::Eq, "'='")?;
                            let (line, col) = (p.line, p.col());
                            match p.next().map(|t| &t.tok) {
                                Some(Tok::Number(raw)) => {
                                    diffusion = raw.parse().map_err(|_| {
                                        syntax(line, col, &format!("invalid diffusion literal '{raw}'"))
                                    })?;
                                    if diffusion < 0.0 {
                                        return Err(syntax(line, col, "diffusion must be nonnegative"));
                                    }
                                }
                                _ => return Err(syntax(line, col, "expected diffusion value")),
                            }
                        }
                        _ => return Err(syntax(line_no, p.col(), "unexpected token in species declaration")),
                    }
                }
                builder.declare_species(&name, diffusion, role)?;
                continue;
            }
        }
        // Reaction line.
        let reactants = p.parse_side(&mut builder)?;
        let reversible = match p.next() {
            Some(Token {
                tok: Tok::Arrow { reversible },
                ..
            }) => *reversible,
            _ => return Err(syntax(line_no, p.col(), "expected '->' or '<->'")),
        };
        let products = p.parse_side(&mut builder)?;
        p.expect(Tok::At, "'@' before rates")?;
        let mut rates = vec![p.parse_rate()?];
        while let Some(Tok::Comma) = p.peek() {
            p.next();
            rates.push(p.parse_rate()?);
        }
        if p.peek().is_some() {
            return Err(syntax(line_no, p.col(), "trailing tokens after rates"));
        }
        let expected = if reversible { 2 } else { 1 };
        if rates.len() != expected {
            return Err(syntax(
                line_no,
                1,
                &format!(
                    "{} reaction takes {} rate(s), got {}",
                    if reversible { "reversible" } else { "irreversible" },
                    expected,
                    rates.len()
                ),
            ));
        }
        let (fname, fval) = rates[0].clone();
        let (backward_label, k_backward) = if reversible {
            let (bname, bval) = rates[1].clone();
            (Some(bname), bval)
        } else {
            (None, 0.0)
        };
        builder.add_reaction(Reaction {
            reactants,
            products,
            k_forward: fval,
            k_backward,
            forward_label: fname,
            backward_label,
        })?;
    }
    let net = builder.build()?;
    if net.reactions.is_empty() {
        return Err(Error::Network("no reactions".into()));
    }
    Ok(net)
}
