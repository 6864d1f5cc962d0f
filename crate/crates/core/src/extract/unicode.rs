//! Inline LaTeX to Unicode conversion.
//!
//! Models disagree on whether inline math is emitted as LaTeX or plain
//! Unicode, so both sides of the comparison are normalized: math regions
//! (`$...$` or `\(...\)`) are rewritten through a curated symbol table
//! covering Greek letters, operators, relations, arrows, and
//! single-character superscripts/subscripts. Unknown commands are stripped
//! while their argument text is kept. The conversion is idempotent: output
//! never contains an unescaped `$`, and text with unbalanced `$` delimiters
//! is returned unchanged.

use std::collections::HashMap;
use std::sync::LazyLock;

static SYMBOL_MAP: LazyLock<HashMap<&'static str, &'static str>> = LazyLock::new(|| {
    let entries: &[(&str, &str)] = &[
        // Greek, lowercase
        ("alpha", "α"), ("beta", "β"), ("gamma", "γ"), ("delta", "δ"),
        ("epsilon", "ε"), ("varepsilon", "ε"), ("zeta", "ζ"), ("eta", "η"),
        ("theta", "θ"), ("vartheta", "ϑ"), ("iota", "ι"), ("kappa", "κ"),
        ("lambda", "λ"), ("mu", "μ"), ("nu", "ν"), ("xi", "ξ"),
        ("omicron", "ο"), ("pi", "π"), ("varpi", "ϖ"), ("rho", "ρ"),
        ("varrho", "ϱ"), ("sigma", "σ"), ("varsigma", "ς"), ("tau", "τ"),
        ("upsilon", "υ"), ("phi", "ϕ"), ("varphi", "φ"), ("chi", "χ"),
        ("psi", "ψ"), ("omega", "ω"),
        // Greek, uppercase
        ("Gamma", "Γ"), ("Delta", "Δ"), ("Theta", "Θ"), ("Lambda", "Λ"),
        ("Xi", "Ξ"), ("Pi", "Π"), ("Sigma", "Σ"), ("Upsilon", "Υ"),
        ("Phi", "Φ"), ("Psi", "Ψ"), ("Omega", "Ω"),
        // Binary operators
        ("times", "×"), ("div", "÷"), ("pm", "±"), ("mp", "∓"),
        ("cdot", "·"), ("ast", "∗"), ("star", "⋆"), ("circ", "∘"),
        ("bullet", "•"), ("oplus", "⊕"), ("ominus", "⊖"), ("otimes", "⊗"),
        ("oslash", "⊘"), ("odot", "⊙"), ("wedge", "∧"), ("vee", "∨"),
        ("land", "∧"), ("lor", "∨"), ("neg", "¬"), ("lnot", "¬"),
        ("cup", "∪"), ("cap", "∩"), ("setminus", "∖"), ("sqcup", "⊔"),
        ("sqcap", "⊓"), ("uplus", "⊎"), ("amalg", "⨿"), ("dagger", "†"),
        ("ddagger", "‡"),
        // Relations
        ("leq", "≤"), ("le", "≤"), ("geq", "≥"), ("ge", "≥"),
        ("neq", "≠"), ("ne", "≠"), ("ll", "≪"), ("gg", "≫"),
        ("approx", "≈"), ("sim", "∼"), ("simeq", "≃"), ("cong", "≅"),
        ("equiv", "≡"), ("propto", "∝"), ("prec", "≺"), ("succ", "≻"),
        ("preceq", "⪯"), ("succeq", "⪰"), ("subset", "⊂"), ("supset", "⊃"),
        ("subseteq", "⊆"), ("supseteq", "⊇"), ("sqsubseteq", "⊑"),
        ("sqsupseteq", "⊒"), ("in", "∈"), ("notin", "∉"), ("ni", "∋"),
        ("perp", "⊥"), ("parallel", "∥"), ("mid", "∣"), ("nmid", "∤"),
        ("vdash", "⊢"), ("dashv", "⊣"), ("models", "⊨"), ("asymp", "≍"),
        ("bowtie", "⋈"), ("doteq", "≐"), ("triangleq", "≜"),
        // Arrows
        ("rightarrow", "→"), ("to", "→"), ("leftarrow", "←"), ("gets", "←"),
        ("leftrightarrow", "↔"), ("Rightarrow", "⇒"), ("Leftarrow", "⇐"),
        ("Leftrightarrow", "⇔"), ("implies", "⇒"), ("iff", "⇔"),
        ("uparrow", "↑"), ("downarrow", "↓"), ("updownarrow", "↕"),
        ("Uparrow", "⇑"), ("Downarrow", "⇓"), ("mapsto", "↦"),
        ("longmapsto", "⟼"), ("longrightarrow", "⟶"), ("longleftarrow", "⟵"),
        ("hookrightarrow", "↪"), ("hookleftarrow", "↩"), ("nearrow", "↗"),
        ("searrow", "↘"), ("swarrow", "↙"), ("nwarrow", "↖"),
        ("rightharpoonup", "⇀"), ("leftharpoonup", "↼"),
        ("rightleftharpoons", "⇌"),
        // Big operators and calculus
        ("sum", "∑"), ("prod", "∏"), ("coprod", "∐"), ("int", "∫"),
        ("iint", "∬"), ("iiint", "∭"), ("oint", "∮"), ("bigcup", "⋃"),
        ("bigcap", "⋂"), ("bigoplus", "⨁"), ("bigotimes", "⨂"),
        ("bigvee", "⋁"), ("bigwedge", "⋀"), ("partial", "∂"), ("nabla", "∇"),
        ("infty", "∞"), ("sqrt", "√"),
        // Logic and sets
        ("forall", "∀"), ("exists", "∃"), ("nexists", "∄"),
        ("emptyset", "∅"), ("varnothing", "∅"), ("aleph", "ℵ"),
        // Letterlike
        ("hbar", "ℏ"), ("ell", "ℓ"), ("Re", "ℜ"), ("Im", "ℑ"), ("wp", "℘"),
        ("imath", "ı"), ("jmath", "ȷ"), ("AA", "Å"),
        // Geometry and misc symbols
        ("angle", "∠"), ("measuredangle", "∡"), ("triangle", "△"),
        ("square", "□"), ("Box", "□"), ("diamond", "⋄"), ("Diamond", "◇"),
        ("clubsuit", "♣"), ("diamondsuit", "♢"), ("heartsuit", "♡"),
        ("spadesuit", "♠"), ("flat", "♭"), ("natural", "♮"), ("sharp", "♯"),
        ("prime", "′"), ("degree", "°"), ("top", "⊤"), ("bot", "⊥"),
        ("therefore", "∴"), ("because", "∵"), ("dots", "…"), ("ldots", "…"),
        ("cdots", "⋯"), ("vdots", "⋮"), ("ddots", "⋱"), ("dotsb", "⋯"),
        ("dotsc", "…"),
        // Delimiters
        ("langle", "⟨"), ("rangle", "⟩"), ("lceil", "⌈"), ("rceil", "⌉"),
        ("lfloor", "⌊"), ("rfloor", "⌋"), ("lvert", "|"), ("rvert", "|"),
        ("lVert", "‖"), ("rVert", "‖"), ("Vert", "‖"), ("vert", "|"),
        ("backslash", "⧵"),
        // Function names keep their text
        ("sin", "sin"), ("cos", "cos"), ("tan", "tan"), ("cot", "cot"),
        ("sec", "sec"), ("csc", "csc"), ("arcsin", "arcsin"),
        ("arccos", "arccos"), ("arctan", "arctan"), ("sinh", "sinh"),
        ("cosh", "cosh"), ("tanh", "tanh"), ("coth", "coth"), ("log", "log"),
        ("ln", "ln"), ("lg", "lg"), ("exp", "exp"), ("min", "min"),
        ("max", "max"), ("sup", "sup"), ("inf", "inf"), ("lim", "lim"),
        ("liminf", "liminf"), ("limsup", "limsup"), ("arg", "arg"),
        ("det", "det"), ("dim", "dim"), ("ker", "ker"), ("deg", "deg"),
        ("gcd", "gcd"), ("hom", "hom"), ("bmod", "mod"), ("pmod", "mod"),
        ("Pr", "Pr"),
        // Spacing
        ("quad", " "), ("qquad", "  "), ("thinspace", " "), ("enspace", " "),
    ];
    entries.iter().copied().collect()
});

/// Commands whose markup is dropped while their arguments flow through.
static STRIP_COMMANDS: LazyLock<HashMap<&'static str, ()>> = LazyLock::new(|| {
    [
        "text", "textrm", "textbf", "textit", "texttt", "textsf", "textup",
        "mathrm", "mathbf", "mathit", "mathcal", "mathbb", "mathfrak",
        "mathsf", "mathtt", "mathnormal", "boldsymbol", "bm", "operatorname",
        "mathop", "left", "right", "big", "Big", "bigg", "Bigg", "bigl",
        "bigr", "Bigl", "Bigr", "biggl", "biggr", "limits", "nolimits",
        "displaystyle", "textstyle", "scriptstyle", "scriptscriptstyle",
        "rm", "bf", "it", "sf", "tt", "cal", "hat", "bar", "vec", "tilde",
        "dot", "ddot", "breve", "check", "acute", "grave", "widehat",
        "widetilde", "overline", "underline", "overbrace", "underbrace",
        "phantom", "vphantom", "hphantom", "mbox", "hbox", "ensuremath",
        "frac", "dfrac", "tfrac", "binom", "stackrel", "overset", "underset",
    ]
    .into_iter()
    .map(|k| (k, ()))
    .collect()
});

fn superscript_char(c: char) -> Option<char> {
    Some(match c {
        '0' => '⁰', '1' => '¹', '2' => '²', '3' => '³', '4' => '⁴',
        '5' => '⁵', '6' => '⁶', '7' => '⁷', '8' => '⁸', '9' => '⁹',
        '+' => '⁺', '-' => '⁻', '=' => '⁼', '(' => '⁽', ')' => '⁾',
        'n' => 'ⁿ', 'i' => 'ⁱ',
        _ => return None,
    })
}

fn subscript_char(c: char) -> Option<char> {
    Some(match c {
        '0' => '₀', '1' => '₁', '2' => '₂', '3' => '₃', '4' => '₄',
        '5' => '₅', '6' => '₆', '7' => '₇', '8' => '₈', '9' => '₉',
        '+' => '₊', '-' => '₋', '=' => '₌', '(' => '₍', ')' => '₎',
        'a' => 'ₐ', 'e' => 'ₑ', 'h' => 'ₕ', 'i' => 'ᵢ', 'j' => 'ⱼ',
        'k' => 'ₖ', 'l' => 'ₗ', 'm' => 'ₘ', 'n' => 'ₙ', 'o' => 'ₒ',
        'p' => 'ₚ', 'r' => 'ᵣ', 's' => 'ₛ', 't' => 'ₜ', 'u' => 'ᵤ',
        'v' => 'ᵥ', 'x' => 'ₓ',
        _ => return None,
    })
}

/// Rewrite inline math regions of a paragraph to Unicode. Text with an odd
/// number of unescaped `$` delimiters is returned unchanged with a warning.
pub fn inline_formula_to_unicode(paragraph: &str) -> String {
    let chars: Vec<char> = paragraph.chars().collect();
    if count_unescaped_dollars(&chars) % 2 != 0 {
        log::warn!("unbalanced $ delimiter; paragraph left unconverted");
        return paragraph.to_owned();
    }

    let mut out = String::with_capacity(paragraph.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' && i + 1 < chars.len() {
            if chars[i + 1] == '(' {
                // \( ... \) region; left literal when unterminated.
                if let Some(close) = find_close(&chars, i + 2) {
                    convert_fragment(&chars[i + 2..close], &mut out);
                    i = close + 2;
                    continue;
                }
            }
            out.push(c);
            out.push(chars[i + 1]);
            i += 2;
            continue;
        }
        if c == '$' {
            // Balance was pre-checked, so a closer exists; walk with the
            // same escape handling as the counter.
            let mut j = i + 1;
            while j < chars.len() {
                match chars[j] {
                    '\\' => j += 2,
                    '$' => break,
                    _ => j += 1,
                }
            }
            let j = j.min(chars.len());
            convert_fragment(&chars[i + 1..j], &mut out);
            i = j + 1;
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

fn count_unescaped_dollars(chars: &[char]) -> usize {
    let mut count = 0;
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '\\' {
            i += 2;
            continue;
        }
        if chars[i] == '$' {
            count += 1;
        }
        i += 1;
    }
    count
}

fn find_close(chars: &[char], from: usize) -> Option<usize> {
    let mut i = from;
    while i + 1 < chars.len() {
        if chars[i] == '\\' {
            if chars[i + 1] == ')' {
                return Some(i);
            }
            i += 2;
            continue;
        }
        i += 1;
    }
    None
}

/// Convert one math fragment (delimiters already removed) and append it.
fn convert_fragment(chars: &[char], out: &mut String) {
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\\' => {
                i += 1;
                if i >= chars.len() {
                    break;
                }
                if chars[i].is_ascii_alphabetic() {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_alphabetic() {
                        i += 1;
                    }
                    let name: String = chars[start..i].iter().collect();
                    if let Some(mapped) = SYMBOL_MAP.get(name.as_str()) {
                        out.push_str(mapped);
                    } else if !STRIP_COMMANDS.contains_key(name.as_str()) {
                        // Unknown command: markup dropped, arguments kept.
                    }
                } else {
                    // Control symbol.
                    match chars[i] {
                        ',' | ';' | ':' | ' ' => out.push(' '),
                        '!' => {}
                        '|' => out.push('‖'),
                        // A literal dollar stays escaped so the output never
                        // regains a math delimiter.
                        '$' => out.push_str("\\$"),
                        other => out.push(other),
                    }
                    i += 1;
                }
            }
            '^' | '_' => {
                let map: fn(char) -> Option<char> =
                    if c == '^' { superscript_char } else { subscript_char };
                i += 1;
                if i >= chars.len() {
                    break;
                }
                if chars[i] == '{' {
                    let close = matching_brace(chars, i);
                    let inner = &chars[i + 1..close];
                    push_scripted(inner, map, out);
                    i = close + 1;
                } else if chars[i] == '\\' {
                    // ^\command: process the command without scripting.
                    continue;
                } else {
                    push_scripted(&chars[i..i + 1], map, out);
                    i += 1;
                }
            }
            '{' | '}' | '&' => i += 1,
            '~' => {
                out.push(' ');
                i += 1;
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
}

/// Index of the brace matching `chars[open]` (which must be `{`), or the end
/// of the fragment when unbalanced.
fn matching_brace(chars: &[char], open: usize) -> usize {
    let mut depth = 0;
    let mut i = open;
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 1,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return i;
                }
            }
            _ => {}
        }
        i += 1;
    }
    chars.len()
}

/// Append `inner` as super/subscript when every character maps; otherwise
/// convert it as a plain fragment.
fn push_scripted(inner: &[char], map: fn(char) -> Option<char>, out: &mut String) {
    let mapped: Option<String> = inner.iter().map(|&c| map(c)).collect();
    match mapped {
        Some(s) if !s.is_empty() => out.push_str(&s),
        _ => convert_fragment(inner, out),
    }
}
