use super::{EventCorpus, PostKind};
use crate::graph::DirectedGraph;

/// Follower → followee graph over every user of the corpus.
pub fn build_ff_network(corpus: &EventCorpus) -> DirectedGraph {
    let idx = |id| corpus.user_index(id).expect("validated corpus");
    let edges = corpus
        .follows()
        .iter()
        .map(|e| (idx(&e.follower), idx(&e.followee)));
    DirectedGraph::new(corpus.sorted_user_ids().to_vec(), edges)
}

/// Answerer → asker graph with one simple edge per interacting pair.
pub fn build_activity_network(corpus: &EventCorpus) -> DirectedGraph {
    let idx = |id| corpus.user_index(id).expect("validated corpus");
    let edges = corpus
        .posts()
        .iter()
        .filter(|p| p.kind == PostKind::Answer)
        .filter_map(|p| {
            let parent = corpus.post(p.parent_question.as_ref()?)?;
            (parent.author != p.author).then(|| (idx(&p.author), idx(&parent.author)))
        });
    DirectedGraph::new(corpus.sorted_user_ids().to_vec(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;
    use crate::graph::reciprocity;

    #[test]
    fn ff_cases() {
        let none = EventCorpus::new(vec![user("a", false), user("b", false)], vec![], vec![], vec![]).unwrap();
        let g = build_ff_network(&none);
        assert_eq!((g.node_count(), g.edge_count()), (2, 0));
        let mutual = EventCorpus::new(
            vec![user("a", false), user("b", false)],
            vec![],
            vec![],
            vec![follow("a", "b"), follow("b", "a")],
        )
        .unwrap();
        let g = build_ff_network(&mutual);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(reciprocity(&g).unwrap(), 1.0);
    }

    #[test]
    fn activity_edges_dedup() {
        let c = EventCorpus::new(
            vec![user("a", false), user("b", false)],
            vec![
                question("q1", "a", 0),
                question("q2", "a", 0),
                answer("x1", "b", "q1", 1),
                answer("x2", "b", "q2", 1),
            ],
            vec![],
            vec![],
        )
        .unwrap();
        let g = build_activity_network(&c);
        assert_eq!(g.edge_count(), 1);
        let (a, b) = (g.index_of(&"a".into()).unwrap(), g.index_of(&"b".into()).unwrap());
        assert!(g.has_edge(b, a));
    }
}
