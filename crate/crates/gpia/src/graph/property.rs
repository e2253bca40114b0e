//! Group properties: COUNT comparisons between two node groups or two
//! link groups defined over the property-feature values.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Node,
    Link,
}

/// A group of nodes (by value) or of links (by endpoint values).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Group {
    /// Nodes with this value; at link level, links whose endpoints both
    /// carry it.
    Value(i64),
    /// Links whose endpoints carry equal values.
    SameValue,
    /// Links whose endpoints carry different values.
    DifferentValue,
    /// Links joining one endpoint of each value (unordered).
    Pair(i64, i64),
}

impl Group {
    fn matches_link(self, a: i64, b: i64) -> bool {
        match self {
            Group::Value(v) => a == v && b == v,
            Group::SameValue => a == b,
            Group::DifferentValue => a != b,
            Group::Pair(x, y) => (a == x && b == y) || (a == y && b == x),
        }
    }

    fn values(self) -> Vec<i64> {
        match self {
            Group::Value(v) => vec![v],
            Group::Pair(a, b) => vec![a, b],
            Group::SameValue | Group::DifferentValue => Vec::new(),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Value(v) => write!(f, "{v}"),
            Group::SameValue => f.write_str("same"),
            Group::DifferentValue => f.write_str("different"),
            Group::Pair(a, b) => write!(f, "{a}-{b}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GroupRepr {
    Value(i64),
    Named(String),
    Pair([i64; 2]),
}

impl Serialize for Group {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Group::Value(v) => GroupRepr::Value(v),
            Group::SameValue => GroupRepr::Named("same".into()),
            Group::DifferentValue => GroupRepr::Named("different".into()),
            Group::Pair(a, b) => GroupRepr::Pair([a, b]),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Group {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match GroupRepr::deserialize(d)? {
            GroupRepr::Value(v) => Ok(Group::Value(v)),
            GroupRepr::Pair([a, b]) => Ok(Group::Pair(a, b)),
            GroupRepr::Named(name) => match name.as_str() {
                "same" => Ok(Group::SameValue),
                "different" | "diff" => Ok(Group::DifferentValue),
                other => Err(serde::de::Error::custom(format!(
                    "unknown group '{other}', expected a value, [a, b], \"same\" or \"different\""
                ))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=", alias = "≤")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=", alias = "≥")]
    Ge,
    #[serde(rename = "=", alias = "==")]
    Eq,
    #[serde(rename = "!=", alias = "≠")]
    Ne,
}

impl Comparator {
    pub fn holds(self, lhs: usize, rhs: usize) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
        }
    }

    /// The comparator that holds exactly when this one does not.
    pub fn complement(self) -> Comparator {
        match self {
            Comparator::Lt => Comparator::Ge,
            Comparator::Le => Comparator::Gt,
            Comparator::Gt => Comparator::Le,
            Comparator::Ge => Comparator::Lt,
            Comparator::Eq => Comparator::Ne,
            Comparator::Ne => Comparator::Eq,
        }
    }

    /// The comparator to use once the two operands are swapped.
    pub fn reversed(self) -> Comparator {
        match self {
            Comparator::Lt => Comparator::Gt,
            Comparator::Le => Comparator::Ge,
            Comparator::Gt => Comparator::Lt,
            Comparator::Ge => Comparator::Le,
            c => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertySpec {
    pub level: Level,
    pub lhs: Group,
    pub rhs: Group,
    pub comparator: Comparator,
    pub property_col: usize,
}

impl PropertySpec {
    /// `COUNT(lhs value) > COUNT(rhs value)` over nodes.
    pub fn node_majority(property_col: usize, lhs: i64, rhs: i64) -> Self {
        PropertySpec {
            level: Level::Node,
            lhs: Group::Value(lhs),
            rhs: Group::Value(rhs),
            comparator: Comparator::Gt,
            property_col,
        }
    }

    /// `COUNT(same-value links) > COUNT(different-value links)`.
    pub fn link_homophily(property_col: usize) -> Self {
        PropertySpec {
            level: Level::Link,
            lhs: Group::SameValue,
            rhs: Group::DifferentValue,
            comparator: Comparator::Gt,
            property_col,
        }
    }

    pub fn with_comparator(&self, comparator: Comparator) -> Self {
        PropertySpec {
            comparator,
            ..self.clone()
        }
    }

    /// Swaps the groups and reverses the comparator; evaluates identically.
    pub fn swapped(&self) -> Self {
        PropertySpec {
            lhs: self.rhs,
            rhs: self.lhs,
            comparator: self.comparator.reversed(),
            ..self.clone()
        }
    }

    /// Checks the spec on its own, without a graph.
    pub fn validate(&self) -> Result<()> {
        if self.lhs == self.rhs {
            return Err(Error::Property("lhs and rhs groups must differ".into()));
        }
        if self.level == Level::Node {
            for g in [self.lhs, self.rhs] {
                if !matches!(g, Group::Value(_)) {
                    return Err(Error::Property(format!(
                        "node-level groups must be single values, got '{g}'"
                    )));
                }
            }
        }
        Ok(())
    }

    fn validate_for(&self, g: &Graph) -> Result<()> {
        self.validate()?;
        if self.property_col != g.property_col() {
            return Err(Error::Property(format!(
                "property column {} does not match the graph's property column {}",
                self.property_col,
                g.property_col()
            )));
        }
        for group in [self.lhs, self.rhs] {
            for v in group.values() {
                if !g.property_values().contains(&v) {
                    return Err(Error::Property(format!(
                        "value {v} is not in the declared value set {:?}",
                        g.property_values()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let op = match self.comparator {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
        };
        let lvl = match self.level {
            Level::Node => "node",
            Level::Link => "link",
        };
        format!("COUNT({lvl}:{}) {op} COUNT({lvl}:{})", self.lhs, self.rhs)
    }
}

/// `(COUNT(lhs), COUNT(rhs))` from per-node values and an edge list,
/// without checking the values against any declared set.
pub fn count_groups_from_values(
    values: &[i64],
    edges: &[(usize, usize)],
    p: &PropertySpec,
) -> (usize, usize) {
    match p.level {
        Level::Node => {
            let count = |g: Group| match g {
                Group::Value(v) => values.iter().filter(|&&x| x == v).count(),
                _ => 0,
            };
            (count(p.lhs), count(p.rhs))
        }
        Level::Link => {
            let mut lhs = 0;
            let mut rhs = 0;
            for &(u, v) in edges {
                let (a, b) = (values[u], values[v]);
                lhs += usize::from(p.lhs.matches_link(a, b));
                rhs += usize::from(p.rhs.matches_link(a, b));
            }
            (lhs, rhs)
        }
    }
}

pub fn evaluate_from_values(values: &[i64], edges: &[(usize, usize)], p: &PropertySpec) -> bool {
    let (lhs, rhs) = count_groups_from_values(values, edges, p);
    p.comparator.holds(lhs, rhs)
}

/// `(COUNT(lhs), COUNT(rhs))` on a graph.
pub fn count_groups(g: &Graph, p: &PropertySpec) -> Result<(usize, usize)> {
    p.validate_for(g)?;
    Ok(count_groups_from_values(&g.property_column(), g.edges(), p))
}

/// Whether `g` satisfies the property.
pub fn evaluate_property(g: &Graph, p: &PropertySpec) -> Result<bool> {
    let (lhs, rhs) = count_groups(g, p)?;
    Ok(p.comparator.holds(lhs, rhs))
}

/// `COUNT(lhs) / COUNT(rhs)`.
pub fn group_size_ratio(g: &Graph, p: &PropertySpec) -> Result<f64> {
    let (lhs, rhs) = count_groups(g, p)?;
    if rhs == 0 {
        return Err(Error::DivisionByZero(format!(
            "group '{}' has no members",
            p.rhs
        )));
    }
    Ok(lhs as f64 / rhs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::with_groups;
    use proptest::prelude::*;

    const MALE: i64 = 1;
    const FEMALE: i64 = 0;

    fn majority() -> PropertySpec {
        PropertySpec::node_majority(0, MALE, FEMALE)
    }

    #[test]
    fn node_counts() {
        let g = with_groups(&[1, 1, 1, 0, 0], &[]);
        assert!(evaluate_property(&g, &majority()).unwrap());
        let g = with_groups(&[1, 1, 0, 0], &[]);
        assert!(!evaluate_property(&g, &majority()).unwrap());
    }

    #[test]
    fn link_counts_on_triangle() {
        let g = with_groups(&[1, 1, 0], &[(0, 1), (1, 2), (0, 2)]);
        let p = PropertySpec::link_homophily(0);
        assert_eq!(count_groups(&g, &p).unwrap(), (1, 2));
        assert!(!evaluate_property(&g, &p).unwrap());
    }

    #[test]
    fn link_value_and_pair_groups() {
        let g = with_groups(&[1, 1, 0, 0], &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        let p = PropertySpec {
            level: Level::Link,
            lhs: Group::Value(1),
            rhs: Group::Pair(0, 1),
            comparator: Comparator::Lt,
            property_col: 0,
        };
        assert_eq!(count_groups(&g, &p).unwrap(), (1, 2));
        assert!(evaluate_property(&g, &p).unwrap());
    }

    #[test]
    fn ratio_and_zero_division() {
        let g = with_groups(&[1, 1, 1, 0, 0], &[]);
        assert!((group_size_ratio(&g, &majority()).unwrap() - 1.5).abs() < 1e-12);
        let declared = with_groups(&[1, 0], &[]);
        let only_zero = with_groups(&[0, 0], &[]).with_declared_values(declared.property_values());
        assert!(matches!(
            group_size_ratio(&only_zero, &PropertySpec::node_majority(0, 0, 1)),
            Err(Error::DivisionByZero(_))
        ));
    }

    #[test]
    fn rejects_undeclared_values_and_equal_groups() {
        let g = with_groups(&[1, 0], &[]);
        let p = PropertySpec::node_majority(0, 7, 0);
        assert!(matches!(evaluate_property(&g, &p), Err(Error::Property(_))));
        let p = PropertySpec::node_majority(0, 1, 1);
        assert!(matches!(evaluate_property(&g, &p), Err(Error::Property(_))));
        let mut p = majority();
        p.lhs = Group::SameValue;
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let p = PropertySpec::link_homophily(2);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"level":"link","lhs":"same","rhs":"different","comparator":">","property_col":2}"#
        );
        let q: PropertySpec = serde_json::from_str(
            r#"{"level":"link","lhs":[0,1],"rhs":1,"comparator":"≤","property_col":0}"#,
        )
        .unwrap();
        assert_eq!(q.lhs, Group::Pair(0, 1));
        assert_eq!(q.comparator, Comparator::Le);
        assert!(serde_json::from_str::<PropertySpec>(
            r#"{"level":"node","lhs":1,"rhs":0,"comparator":">","property_col":0,"x":1}"#
        )
        .is_err());
    }

    fn comparators() -> impl Strategy<Value = Comparator> {
        prop_oneof![
            Just(Comparator::Lt),
            Just(Comparator::Le),
            Just(Comparator::Gt),
            Just(Comparator::Ge),
            Just(Comparator::Eq),
            Just(Comparator::Ne),
        ]
    }

    fn small_graph() -> impl Strategy<Value = crate::graph::Graph> {
        (2usize..12)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(0i64..2, n),
                    proptest::collection::vec((0..n, 0..n), 0..3 * n),
                )
            })
            .prop_map(|(mut values, pairs)| {
                values[0] = 0;
                values[1] = 1;
                let mut edges: Vec<(usize, usize)> = pairs
                    .into_iter()
                    .filter(|(u, v)| u != v)
                    .map(|(u, v)| (u.min(v), u.max(v)))
                    .collect();
                edges.sort_unstable();
                edges.dedup();
                with_groups(&values, &edges)
            })
    }

    proptest! {
        #[test]
        fn complement_law(g in small_graph(), c in comparators(), link in any::<bool>()) {
            let base = if link { PropertySpec::link_homophily(0) } else { majority() };
            let p = base.with_comparator(c);
            let q = base.with_comparator(c.complement());
            prop_assert!(evaluate_property(&g, &p).unwrap() ^ evaluate_property(&g, &q).unwrap());
        }

        #[test]
        fn swap_law(g in small_graph(), c in comparators(), link in any::<bool>()) {
            let base = if link { PropertySpec::link_homophily(0) } else { majority() };
            let p = base.with_comparator(c);
            prop_assert_eq!(evaluate_property(&g, &p).unwrap(), evaluate_property(&g, &p.swapped()).unwrap());
        }
    }
}
