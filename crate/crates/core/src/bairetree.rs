//! Sparse m-adic prefix tree: hierarchical clustering in one pass.
//!
//! Each inserted key is walked digit by digit for `max_depth` levels, so the
//! whole build costs exactly `n * max_depth` digit inspections. Nodes exist
//! only for occupied prefixes; the depth-`d` nodes are the level-`d` clusters
//! and the tree is immutable once built.

use std::collections::HashMap;

use serde_json::json;

use crate::error::{Error, Result};
use crate::madic::{digit_string, BaireValue, DigitKey};

/// Identifier a caller attaches to each inserted key (typically a row index).
pub type ItemId = usize;

/// One node of the prefix tree.
///
/// Member lists are materialized at the deepest level only; interior nodes
/// carry counts and recover their members by walking descendants. Child slots
/// are a fixed digit-indexed array, not a hash map.
#[derive(Debug, Clone)]
pub struct TreeNode {
    prefix: Vec<u8>,
    count: usize,
    members: Vec<ItemId>,
    children: Vec<Option<Box<TreeNode>>>,
}

impl TreeNode {
    fn new(prefix: Vec<u8>, base: u32) -> Self {
        Self {
            prefix,
            count: 0,
            members: Vec::new(),
            children: (0..base).map(|_| None).collect(),
        }
    }

    /// Digit path from the root to this node; its length is the node depth.
    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    /// Number of items whose keys pass through this node.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Present children in digit order.
    pub fn children(&self) -> impl Iterator<Item = &TreeNode> {
        self.children.iter().filter_map(|c| c.as_deref())
    }

    fn collect_members(&self, out: &mut Vec<ItemId>) {
        out.extend_from_slice(&self.members);
        for child in self.children() {
            child.collect_members(out);
        }
    }

    fn node_count(&self) -> usize {
        1 + self.children().map(TreeNode::node_count).sum::<usize>()
    }

    fn to_json(&self, member_limit: usize) -> serde_json::Value {
        let mut obj = json!({
            "prefix": digit_string(&self.prefix),
            "count": self.count,
        });
        if !self.members.is_empty() && self.members.len() <= member_limit {
            let mut members = self.members.clone();
            members.sort_unstable();
            obj["members"] = json!(members);
        }
        let children: Vec<_> = self.children().map(|c| c.to_json(member_limit)).collect();
        if !children.is_empty() {
            obj["children"] = json!(children);
        }
        obj
    }
}

/// All occupied prefixes of one length, with their member lists.
///
/// Clusters are disjoint, their union is the full inserted set, and iteration
/// order is lexicographic by prefix. Member lists are sorted by item id, so
/// the clustering is identical for any permutation of the build input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelClustering {
    level: usize,
    base: u32,
    clusters: std::collections::BTreeMap<Vec<u8>, Vec<ItemId>>,
}

impl LevelClustering {
    /// Assembles a clustering directly from prefix groups.
    ///
    /// Used where level clusters come from a source other than a tree, e.g.
    /// grouping observations by the shared prefix of a key pair.
    pub fn from_groups(
        level: usize,
        base: u32,
        groups: std::collections::BTreeMap<Vec<u8>, Vec<ItemId>>,
    ) -> Result<Self> {
        if level == 0 {
            return Err(Error::Range("clustering level must be at least 1".into()));
        }
        for (prefix, members) in &groups {
            if prefix.len() != level {
                return Err(Error::Shape(format!(
                    "prefix {} has length {}, expected {level}",
                    digit_string(prefix),
                    prefix.len()
                )));
            }
            if prefix.iter().any(|&d| u32::from(d) >= base) {
                return Err(Error::Domain(format!(
                    "prefix {} holds a digit out of range for base {base}",
                    digit_string(prefix)
                )));
            }
            if members.is_empty() {
                return Err(Error::Domain("clusters must be non-empty".into()));
            }
        }
        let mut clusters = groups;
        for members in clusters.values_mut() {
            members.sort_unstable();
        }
        Ok(Self {
            level,
            base,
            clusters,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Occupied clusters in lexicographic prefix order.
    pub fn clusters(&self) -> &std::collections::BTreeMap<Vec<u8>, Vec<ItemId>> {
        &self.clusters
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn item_count(&self) -> usize {
        self.clusters.values().map(Vec::len).sum()
    }

    /// Every prefix a node *could* occupy at this level: each occupied parent
    /// prefix extended by every digit of the base. Occupied prefixes are a
    /// subset; the rest are the "empty" potential clusters.
    pub fn potential_prefixes(&self) -> Vec<Vec<u8>> {
        let parents: std::collections::BTreeSet<Vec<u8>> = self
            .clusters
            .keys()
            .map(|p| p[..p.len() - 1].to_vec())
            .collect();
        let mut out = Vec::with_capacity(parents.len() * self.base as usize);
        for parent in parents {
            for digit in 0..self.base as u8 {
                let mut prefix = parent.clone();
                prefix.push(digit);
                out.push(prefix);
            }
        }
        out
    }
}

/// Sparse m-adic prefix tree over a set of digit keys.
#[derive(Debug, Clone)]
pub struct BaireTree {
    base: u32,
    max_depth: usize,
    precision: usize,
    includes_integer_digit: bool,
    root: TreeNode,
    item_count: usize,
    digit_inspections: u64,
    paths: HashMap<ItemId, Vec<u8>>,
}

impl BaireTree {
    /// Builds the tree in a single sequential pass.
    ///
    /// Work is exactly `n * max_depth` digit inspections and the resulting
    /// clusters do not depend on input order. All keys must share base,
    /// precision, and digit convention; item ids must be unique. An empty
    /// input yields a valid empty tree (base 10).
    pub fn build<'a, I>(keys: I, max_depth: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (ItemId, &'a DigitKey)>,
    {
        if max_depth == 0 {
            return Err(Error::Range("max_depth must be at least 1".into()));
        }
        let mut tree: Option<BaireTree> = None;
        for (id, key) in keys {
            if tree.is_none() {
                if max_depth > key.precision() {
                    return Err(Error::Range(format!(
                        "max_depth {max_depth} exceeds key precision {}",
                        key.precision()
                    )));
                }
                tree = Some(BaireTree::empty_with(
                    key.base(),
                    max_depth,
                    key.precision(),
                    key.includes_integer_digit(),
                ));
            }
            tree.as_mut().expect("just initialized").insert(id, key)?;
        }
        Ok(tree.unwrap_or_else(|| BaireTree::empty_with(10, max_depth, max_depth, true)))
    }

    /// Parallel build: shards the input by first digit, builds the disjoint
    /// subtrees concurrently, and grafts them. The result is identical to
    /// [`BaireTree::build`] on the same input, bit for bit.
    pub fn build_parallel(keys: &[(ItemId, &DigitKey)], max_depth: usize) -> Result<Self> {
        use rayon::prelude::*;

        let Some((_, first)) = keys.first() else {
            return Self::build(std::iter::empty(), max_depth);
        };
        if max_depth == 0 {
            return Err(Error::Range("max_depth must be at least 1".into()));
        }
        if max_depth > first.precision() {
            return Err(Error::Range(format!(
                "max_depth {max_depth} exceeds key precision {}",
                first.precision()
            )));
        }
        let base = first.base();
        let mut shards: Vec<Vec<(ItemId, &DigitKey)>> = (0..base).map(|_| Vec::new()).collect();
        for &(id, key) in keys {
            if key.base() != base
                || key.precision() != first.precision()
                || key.includes_integer_digit() != first.includes_integer_digit()
            {
                return Err(Error::Convention(
                    "all keys in one build must share base, precision, and convention".into(),
                ));
            }
            shards[key.digits()[0] as usize].push((id, key));
        }
        let subtrees: Vec<BaireTree> = shards
            .par_iter()
            .map(|shard| Self::build(shard.iter().copied(), max_depth))
            .collect::<Result<_>>()?;

        let mut merged = BaireTree::empty_with(
            base,
            max_depth,
            first.precision(),
            first.includes_integer_digit(),
        );
        for (digit, sub) in subtrees.into_iter().enumerate() {
            if sub.item_count == 0 {
                continue;
            }
            merged.item_count += sub.item_count;
            merged.digit_inspections += sub.digit_inspections;
            merged.root.count += sub.root.count;
            merged.root.children[digit] = sub.root.children.into_iter().nth(digit).flatten();
            for (id, path) in sub.paths {
                if merged.paths.insert(id, path).is_some() {
                    return Err(Error::Domain(format!("duplicate item id {id}")));
                }
            }
        }
        Ok(merged)
    }

    fn empty_with(
        base: u32,
        max_depth: usize,
        precision: usize,
        includes_integer_digit: bool,
    ) -> Self {
        Self {
            base,
            max_depth,
            precision,
            includes_integer_digit,
            root: TreeNode::new(Vec::new(), base),
            item_count: 0,
            digit_inspections: 0,
            paths: HashMap::new(),
        }
    }

    fn insert(&mut self, id: ItemId, key: &DigitKey) -> Result<()> {
        if key.base() != self.base
            || key.precision() != self.precision
            || key.includes_integer_digit() != self.includes_integer_digit
        {
            return Err(Error::Convention(
                "all keys in one build must share base, precision, and convention".into(),
            ));
        }
        let path = &key.digits()[..self.max_depth];
        if self.paths.insert(id, path.to_vec()).is_some() {
            return Err(Error::Domain(format!("duplicate item id {id}")));
        }
        let mut node = &mut self.root;
        node.count += 1;
        for depth in 0..self.max_depth {
            let digit = path[depth] as usize;
            self.digit_inspections += 1;
            node = node.children[digit]
                .get_or_insert_with(|| Box::new(TreeNode::new(path[..=depth].to_vec(), self.base)));
            node.count += 1;
        }
        node.members.push(id);
        self.item_count += 1;
        Ok(())
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Digit reads performed by the bucketing walk; exactly
    /// `item_count * max_depth` by construction.
    pub fn digit_inspections(&self) -> u64 {
        self.digit_inspections
    }

    /// Materialized nodes below the root.
    pub fn node_count(&self) -> usize {
        self.root.node_count() - 1
    }

    /// Materialized nodes at one depth.
    pub fn level_node_count(&self, level: usize) -> Result<usize> {
        self.check_level(level)?;
        let mut stack = vec![&self.root];
        let mut count = 0;
        while let Some(node) = stack.pop() {
            if node.prefix.len() == level {
                count += 1;
            } else {
                stack.extend(node.children());
            }
        }
        Ok(count)
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.max_depth {
            return Err(Error::Range(format!(
                "level {level} outside 1..={}",
                self.max_depth
            )));
        }
        Ok(())
    }

    /// The level-`level` clusters: every occupied prefix of that length with
    /// its full member list.
    pub fn clusters_at_level(&self, level: usize) -> Result<LevelClustering> {
        self.check_level(level)?;
        let mut clusters = std::collections::BTreeMap::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            if node.prefix.len() == level {
                let mut members = Vec::with_capacity(node.count);
                node.collect_members(&mut members);
                members.sort_unstable();
                clusters.insert(node.prefix.clone(), members);
            } else {
                stack.extend(node.children());
            }
        }
        Ok(LevelClustering {
            level,
            base: self.base,
            clusters,
        })
    }

    /// All items whose key starts with `prefix`, sorted by id; empty when the
    /// prefix node does not exist.
    pub fn retrieve_subtree(&self, prefix: &[u8]) -> Result<Vec<ItemId>> {
        if prefix.len() > self.max_depth {
            return Err(Error::Range(format!(
                "prefix length {} exceeds max_depth {}",
                prefix.len(),
                self.max_depth
            )));
        }
        if let Some(&d) = prefix.iter().find(|&&d| u32::from(d) >= self.base) {
            return Err(Error::Domain(format!(
                "digit {d} out of range for base {}",
                self.base
            )));
        }
        let mut node = &self.root;
        for &digit in prefix {
            match &node.children[digit as usize] {
                Some(child) => node = child,
                None => return Ok(Vec::new()),
            }
        }
        let mut members = Vec::with_capacity(node.count);
        node.collect_members(&mut members);
        members.sort_unstable();
        Ok(members)
    }

    /// Distance induced by the tree: `base^(-d)` where `d` is the depth of
    /// the deepest node holding both items. Equals the Baire distance of the
    /// two keys whenever `max_depth` is the full key precision.
    pub fn cophenetic_distance(&self, a: ItemId, b: ItemId) -> Result<BaireValue> {
        let pa = self
            .paths
            .get(&a)
            .ok_or_else(|| Error::NotFound(format!("item id {a}")))?;
        let pb = self
            .paths
            .get(&b)
            .ok_or_else(|| Error::NotFound(format!("item id {b}")))?;
        let depth = pa.iter().zip(pb).take_while(|(x, y)| x == y).count();
        BaireValue::new(depth as u32, self.base)
    }

    /// Nested JSON rendering of the tree. Member lists appear only on nodes
    /// holding at most `member_limit` items.
    pub fn to_json(&self, member_limit: usize) -> serde_json::Value {
        json!({
            "base": self.base,
            "max_depth": self.max_depth,
            "item_count": self.item_count,
            "node_count": self.node_count(),
            "root": self.root.to_json(member_limit),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::madic::encode;

    fn keys(texts: &[&str], precision: usize) -> Vec<DigitKey> {
        texts
            .iter()
            .map(|t| encode(t, 10, precision, true).unwrap())
            .collect()
    }

    fn build(texts: &[&str], precision: usize, depth: usize) -> BaireTree {
        let keys = keys(texts, precision);
        BaireTree::build(keys.iter().enumerate(), depth).unwrap()
    }

    #[test]
    fn level_clusters_read_off_prefixes() {
        let tree = build(&["0.43", "0.44", "0.51"], 4, 2);
        let level2 = tree.clusters_at_level(2).unwrap();
        assert_eq!(level2.cluster_count(), 2);
        assert_eq!(level2.clusters()[&vec![0, 4]], vec![0, 1]);
        assert_eq!(level2.clusters()[&vec![0, 5]], vec![2]);
    }

    #[test]
    fn identical_keys_collapse_to_one_node_per_level() {
        let tree = build(&["0.25"; 7], 4, 3);
        for level in 1..=3 {
            let lc = tree.clusters_at_level(level).unwrap();
            assert_eq!(lc.cluster_count(), 1);
            assert_eq!(lc.item_count(), 7);
        }
        assert_eq!(tree.node_count(), 3);
    }

    #[test]
    fn empty_input_builds_a_valid_empty_tree() {
        let tree = BaireTree::build(std::iter::empty(), 3).unwrap();
        assert_eq!(tree.item_count(), 0);
        assert_eq!(tree.node_count(), 0);
        assert_eq!(tree.clusters_at_level(2).unwrap().cluster_count(), 0);
        assert!(tree.retrieve_subtree(&[4]).unwrap().is_empty());
    }

    #[test]
    fn build_rejects_bad_depth_and_mixed_conventions() {
        let k = keys(&["0.43"], 4);
        assert!(matches!(
            BaireTree::build([(0usize, &k[0])], 0),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            BaireTree::build([(0usize, &k[0])], 5),
            Err(Error::Range(_))
        ));
        let other = encode("0.43", 10, 6, true).unwrap();
        assert!(matches!(
            BaireTree::build([(0, &k[0]), (1, &other)], 3),
            Err(Error::Convention(_))
        ));
        assert!(matches!(
            BaireTree::build([(0, &k[0]), (0, &k[0])], 3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn retrieve_subtree_walks_descendants() {
        let tree = build(&["0.43", "0.44", "0.51"], 4, 2);
        assert_eq!(tree.retrieve_subtree(&[0, 4]).unwrap(), vec![0, 1]);
        assert_eq!(tree.retrieve_subtree(&[]).unwrap(), vec![0, 1, 2]);
        assert!(tree.retrieve_subtree(&[0, 9]).unwrap().is_empty());
        assert!(matches!(
            tree.retrieve_subtree(&[10]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            tree.retrieve_subtree(&[0, 4, 3]),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn cophenetic_distance_via_tree_matches_worked_example() {
        let keys = keys(&["0.478", "0.472"], 4);
        let tree = BaireTree::build(keys.iter().enumerate(), 4).unwrap();
        let d = tree.cophenetic_distance(0, 1).unwrap();
        assert_eq!(d.exponent(), 3); // integer digit + two decimals
        let same = tree.cophenetic_distance(0, 0).unwrap();
        assert_eq!(same.exponent(), 4);
        assert!(matches!(
            tree.cophenetic_distance(0, 9),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn digit_inspections_are_exactly_n_times_depth() {
        let tree = build(&["0.1", "0.2", "0.3", "0.41", "0.42"], 4, 3);
        assert_eq!(tree.digit_inspections(), 5 * 3);
    }

    #[test]
    fn clusterings_nest_and_ignore_input_order() {
        let texts = ["0.431", "0.438", "0.451", "0.52", "0.431", "0.11"];
        let forward = build(&texts, 4, 3);
        let mut rev: Vec<(usize, DigitKey)> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| (i, encode(t, 10, 4, true).unwrap()))
            .collect();
        rev.reverse();
        let backward = BaireTree::build(rev.iter().map(|(i, k)| (*i, k)), 3).unwrap();
        for level in 1..=3 {
            let a = forward.clusters_at_level(level).unwrap();
            let b = backward.clusters_at_level(level).unwrap();
            assert_eq!(a, b);
        }
        // Refinement: every level-3 cluster sits inside one level-2 cluster.
        let coarse = forward.clusters_at_level(2).unwrap();
        let fine = forward.clusters_at_level(3).unwrap();
        for (prefix, members) in fine.clusters() {
            let parent = &coarse.clusters()[&prefix[..2].to_vec()];
            assert!(members.iter().all(|m| parent.contains(m)));
        }
    }

    #[test]
    fn parallel_build_matches_sequential() {
        let texts: Vec<String> = (0..500)
            .map(|i| format!("0.{:04}", (i * 37) % 6000))
            .collect();
        let keys: Vec<DigitKey> = texts
            .iter()
            .map(|t| encode(t, 10, 5, true).unwrap())
            .collect();
        let pairs: Vec<(usize, &DigitKey)> = keys.iter().enumerate().collect();
        let seq = BaireTree::build(pairs.iter().copied(), 4).unwrap();
        let par = BaireTree::build_parallel(&pairs, 4).unwrap();
        assert_eq!(seq.item_count(), par.item_count());
        assert_eq!(seq.digit_inspections(), par.digit_inspections());
        assert_eq!(seq.node_count(), par.node_count());
        assert_eq!(seq.to_json(usize::MAX), par.to_json(usize::MAX));
        for level in 1..=4 {
            assert_eq!(
                seq.clusters_at_level(level).unwrap(),
                par.clusters_at_level(level).unwrap()
            );
        }
    }

    #[test]
    fn json_dump_elides_large_member_lists() {
        let tree = build(&["0.43", "0.44", "0.51"], 4, 2);
        let full = tree.to_json(10);
        let elided = tree.to_json(1);
        assert_eq!(full["item_count"], 3);
        let text = full.to_string();
        assert!(text.contains("\"members\""));
        let text = elided.to_string();
        assert!(text.contains("\"members\":[2]"));
        assert!(!text.contains("[0,1]"));
    }

    #[test]
    fn node_count_stays_sparse_at_catalog_scale() {
        use rand::{Rng, SeedableRng};
        // 443,014 values in [0, 0.6): the depth-4 node count is bounded by
        // the 6,000-node potential grid, not by n.
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(40);
        let keys: Vec<DigitKey> = (0..443_014)
            .map(|_| {
                let mut digits = vec![0u8, rng.gen_range(0..6)];
                digits.extend((0..4).map(|_| rng.gen_range(0..10u8)));
                DigitKey::from_digits(digits, 10, true).unwrap()
            })
            .collect();
        let tree = BaireTree::build(keys.iter().enumerate(), 4).unwrap();
        assert!(tree.level_node_count(4).unwrap() <= 6_000);
        assert_eq!(tree.level_node_count(2).unwrap(), 6);
        assert_eq!(tree.digit_inspections(), 443_014 * 4);
    }

    #[test]
    fn potential_prefixes_extend_occupied_parents() {
        let tree = build(&["0.03", "0.12", "0.55"], 4, 3);
        // One parent at level 1 ("0") gives ten potential level-2 prefixes.
        let level2 = tree.clusters_at_level(2).unwrap();
        assert_eq!(level2.potential_prefixes().len(), 10);
        // Three occupied level-2 parents give thirty potential level-3 ones.
        let level3 = tree.clusters_at_level(3).unwrap();
        let potential = level3.potential_prefixes();
        assert_eq!(potential.len(), 3 * 10);
        assert!(potential.contains(&vec![0, 0, 0]));
        assert!(potential.contains(&vec![0, 5, 9]));
        assert!(!potential.contains(&vec![0, 9, 0]));
    }
}
