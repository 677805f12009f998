use std::fmt::Write;

use crate::time::Millis;

/// One trace record: `t_ms<TAB>kind<TAB>k=v k=v ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub t: Millis,
    pub kind: &'static str,
    pub fields: Vec<(&'static str, String)>,
}

impl TraceEvent {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }

    pub fn is(&self, kind: &str, pairs: &[(&str, &str)]) -> bool {
        self.kind == kind && pairs.iter().all(|(k, v)| self.get(k) == Some(v))
    }

    pub fn to_line(&self) -> String {
        let mut s = format!("{}\t{}\t", self.t, self.kind);
        for (i, (k, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{k}={v}");
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventTrace {
    events: Vec<TraceEvent>,
}

impl EventTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: Millis, kind: &'static str, fields: Vec<(&'static str, String)>) {
        debug_assert!(self.events.last().is_none_or(|e| e.t <= t), "trace time went backwards");
        self.events.push(TraceEvent { t, kind, fields });
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a TraceEvent> + 'a {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn first(&self, kind: &str, pairs: &[(&str, &str)]) -> Option<&TraceEvent> {
        self.events.iter().find(|e| e.is(kind, pairs))
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&e.to_line());
            s.push('\n');
        }
        s
    }
}

#[macro_export]
#[doc(hidden)]
macro_rules! fields {
    ($($k:ident = $v:expr),* $(,)?) => {
        vec![$((stringify!($k), $v.to_string())),*]
    };
}
