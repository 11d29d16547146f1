use std::fmt;

use crate::corpus::Span;
use crate::merger::Candidate;

/// Position of a token within a tagged run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    /// Begins a contiguous entity.
    B,
    I,
    /// Begins a head segment, shared by several entities.
    BH,
    IH,
    /// Begins a body segment of one discontiguous entity.
    BD,
    ID,
}

impl Role {
    pub const ALL: [Role; 6] = [Role::B, Role::I, Role::BH, Role::IH, Role::BD, Role::ID];

    pub fn is_inside(self) -> bool {
        matches!(self, Role::I | Role::IH | Role::ID)
    }

    /// The role that may precede an inside role besides itself.
    pub fn begin_of(self) -> Role {
        match self {
            Role::B | Role::I => Role::B,
            Role::BH | Role::IH => Role::BH,
            Role::BD | Role::ID => Role::BD,
        }
    }

    pub fn inside_of(self) -> Role {
        match self {
            Role::B | Role::I => Role::I,
            Role::BH | Role::IH => Role::IH,
            Role::BD | Role::ID => Role::ID,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Role::B => "B",
            Role::I => "I",
            Role::BH => "BH",
            Role::IH => "IH",
            Role::BD => "BD",
            Role::ID => "ID",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    O,
    Typed(Role, usize),
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::Typed(r, k) => write!(f, "{}-{k}", r.name()),
        }
    }
}

/// Tag inventory for `num_types` entity types: `O` at index 0, then six
/// roles per type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagSet {
    num_types: usize,
}

impl TagSet {
    pub fn new(num_types: usize) -> Self {
        TagSet { num_types }
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn len(&self) -> usize {
        1 + 6 * self.num_types
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, tag: Tag) -> usize {
        match tag {
            Tag::O => 0,
            Tag::Typed(r, k) => {
                assert!(k < self.num_types);
                1 + 6 * k + Role::ALL.iter().position(|&x| x == r).unwrap()
            }
        }
    }

    pub fn tag(&self, idx: usize) -> Tag {
        assert!(idx < self.len());
        if idx == 0 {
            Tag::O
        } else {
            Tag::Typed(Role::ALL[(idx - 1) % 6], (idx - 1) / 6)
        }
    }

    pub fn can_start(&self, idx: usize) -> bool {
        !matches!(self.tag(idx), Tag::Typed(r, _) if r.is_inside())
    }

    /// Inside tags only continue a run of the same role family and type.
    pub fn allowed(&self, prev: usize, next: usize) -> bool {
        match self.tag(next) {
            Tag::Typed(r, k) if r.is_inside() => match self.tag(prev) {
                Tag::Typed(p, pk) => pk == k && (p == r || p == r.begin_of()),
                Tag::O => false,
            },
            _ => true,
        }
    }

    pub fn is_valid(&self, seq: &[Tag]) -> bool {
        let idx: Vec<usize> = seq.iter().map(|&t| self.index(t)).collect();
        idx.first().is_none_or(|&t| self.can_start(t)) && idx.windows(2).all(|w| self.allowed(w[0], w[1]))
    }
}

/// Tags an entity set. Segments of discontiguous entities that are shared
/// by several entities or overlap another entity become heads, the other
/// discontiguous segments bodies, and single-segment entities `B I*`. Where
/// segments compete for a token the head wins over the body, the body over
/// the contiguous entity, then the lower type and the earlier span.
pub fn encode_tags(entities: &[Candidate], n: usize) -> Vec<Tag> {
    // (priority, label, span, begin role)
    let mut owner: Vec<Option<(u8, usize, Span, Role)>> = vec![None; n];
    let mut paint = |p: u8, label: usize, span: Span, role: Role| {
        for t in span.positions() {
            let cand = (p, label, span, role);
            if owner[t].is_none_or(|o| (cand.0, cand.1, cand.2) < (o.0, o.1, o.2)) {
                owner[t] = Some(cand);
            }
        }
    };
    for (ei, e) in entities.iter().enumerate() {
        if e.spans.len() == 1 {
            paint(2, e.label, e.spans[0], Role::B);
            continue;
        }
        for &s in &e.spans {
            let shared = entities.iter().enumerate().any(|(oi, o)| {
                oi != ei && (o.spans.contains(&s) || o.spans.iter().any(|os| os.overlaps(&s)))
            });
            if shared {
                paint(0, e.label, s, Role::BH);
            } else {
                paint(1, e.label, s, Role::BD);
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        out.push(match owner[t] {
            None => Tag::O,
            Some((p, label, span, role)) => {
                let continues = t > 0 && owner[t - 1].is_some_and(|o| (o.0, o.1, o.2) == (p, label, span));
                if continues {
                    Tag::Typed(role.inside_of(), label)
                } else {
                    Tag::Typed(role, label)
                }
            }
        });
    }
    out
}
