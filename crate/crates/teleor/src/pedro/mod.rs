//! Pedro-compatible publish/subscribe messaging over TCP.
//!
//! All frames are newline-terminated UTF-8 term text. Each client holds
//! two sockets: a data channel (notifications in, deliveries out) and an
//! ack channel carrying one digit (`1`/`0`) per data-channel write.
//!
//! Wire details this implementation fixes (the protocol description
//! leaves them loose):
//! - handshake first line: `host ack_port data_port\n`
//! - client id: a decimal integer line
//! - delivery frame: `rock : payload\n`

mod broker;
mod client;

pub use broker::Broker;
pub use client::Client;

use crate::term::{format_term, match_term, parse_term, Bindings, Number, Term};

pub const DEFAULT_PORT: u16 = 4550;
pub const IO_TIMEOUT: std::time::Duration = std::time::Duration::from_secs(5);

#[derive(Debug, thiserror::Error)]
pub enum PedroError {
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("transport error: {0}")]
    Transport(#[from] std::io::Error),
}

/// One newline-terminated term frame.
pub fn encode(payload: &Term) -> String {
    let mut s = format_term(payload);
    debug_assert!(!s.contains('\n'), "frame must not contain an interior newline");
    s.push('\n');
    s
}

pub fn decode(line: &str) -> Option<Term> {
    parse_term(line.trim_end_matches(['\r', '\n'])).ok()
}

/// A registered name may not contain the reserved punctuation.
pub fn name_is_valid(name: &str) -> bool {
    !name.is_empty() && !name.contains([',', ':', '@'])
}

#[derive(Debug, Clone)]
pub struct Subscription {
    pub id: u64,
    pub head: Term,
    /// body in the restricted condition language, kept as a term
    pub body: Term,
    pub rock: i64,
}

/// Evaluate a subscription body under the head-match bindings. The body
/// language is `true`, comparisons of arithmetic expressions (operands may
/// be `length(V)` over a list-bound variable), and `&`-conjunctions.
/// Anything that cannot be evaluated counts as a non-match.
pub fn evaluate_body(body: &Term, bindings: &Bindings) -> bool {
    match body {
        Term::Atom(a) if a == "true" => true,
        Term::Compound(op, args) if op == "&" && args.len() == 2 => {
            evaluate_body(&args[0], bindings) && evaluate_body(&args[1], bindings)
        }
        Term::Compound(op, args)
            if args.len() == 2 && matches!(op.as_str(), "<" | "<=" | ">" | ">=" | "==") =>
        {
            let (Some(l), Some(r)) = (
                eval_numeric(&args[0], bindings),
                eval_numeric(&args[1], bindings),
            ) else {
                return false;
            };
            match op.as_str() {
                "<" => l < r,
                "<=" => l <= r,
                ">" => l > r,
                ">=" => l >= r,
                _ => l == r,
            }
        }
        _ => false,
    }
}

fn eval_numeric(t: &Term, bindings: &Bindings) -> Option<f64> {
    match t {
        Term::Number(n) => Some(n.as_f64()),
        Term::Var(v) => match bindings.get(v)? {
            Term::Number(n) => Some(n.as_f64()),
            _ => None,
        },
        Term::Compound(f, args) if f == "length" && args.len() == 1 => {
            let arg = match &args[0] {
                Term::Var(v) => bindings.get(v)?,
                other => other,
            };
            match arg {
                Term::List(items) => Some(items.len() as f64),
                _ => None,
            }
        }
        Term::Compound(op, args)
            if args.len() == 2 && matches!(op.as_str(), "+" | "-" | "*" | "/") =>
        {
            let l = eval_numeric(&args[0], bindings)?;
            let r = eval_numeric(&args[1], bindings)?;
            match op.as_str() {
                "+" => Some(l + r),
                "-" => Some(l - r),
                "*" => Some(l * r),
                _ => {
                    if r == 0.0 {
                        None
                    } else {
                        Some(l / r)
                    }
                }
            }
        }
        _ => None,
    }
}

/// Which subscriptions does a ground notification reach? Returned in
/// subscription creation order as (subscription, payload bindings).
pub fn broker_route<'s>(
    notification: &Term,
    subs: &'s [Subscription],
) -> Vec<(&'s Subscription, Bindings)> {
    let mut out = Vec::new();
    for sub in subs {
        match match_term(&sub.head, notification, &Bindings::new()) {
            Ok(Some(sigma)) => {
                if evaluate_body(&sub.body, &sigma) {
                    out.push((sub, sigma));
                }
            }
            Ok(None) => {}
            Err(e) => log::warn!("subscription {} head not matchable: {e}", sub.id),
        }
    }
    out
}

/// Is `term` one of the broker-consumed control messages?
pub(crate) fn as_number_i64(t: &Term) -> Option<i64> {
    match t {
        Term::Number(Number::Int(n)) => Some(*n),
        _ => None,
    }
}
