//! Axis-aligned bounding-box tree over triangles for nearest-point queries.

use crate::Vec3;

use super::triangle::{closest_point_barycentric, combine};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            lo: Vec3::repeat(f64::INFINITY),
            hi: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn merge(&mut self, o: &Aabb) {
        self.lo = self.lo.inf(&o.lo);
        self.hi = self.hi.sup(&o.hi);
    }

    /// Squared distance from `p` to the box (zero inside).
    fn dist2(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let e = (self.lo[k] - p[k]).max(0.0).max(p[k] - self.hi[k]);
            d += e * e;
        }
        d
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Nearest-triangle hit.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hit {
    pub dist2: f64,
    pub id: usize,
    pub barycentric: [f64; 3],
    pub corners: [Vec3; 3],
}

#[derive(Debug, Clone)]
pub(crate) struct TriangleTree {
    tris: Vec<(usize, [Vec3; 3])>,
    nodes: Vec<Node>,
}

impl TriangleTree {
    /// `tris` pairs a caller-side triangle id with its corner positions.
    pub fn build(mut tris: Vec<(usize, [Vec3; 3])>) -> Self {
        let mut nodes = Vec::new();
        if !tris.is_empty() {
            let n = tris.len();
            build_node(&mut tris, 0, n, &mut nodes);
        }
        TriangleTree { tris, nodes }
    }

    /// Globally nearest triangle; equal distances resolve to the lowest id.
    pub fn nearest(&self, p: &Vec3) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<Hit> = None;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if let Some(b) = &best {
                if node.bounds().dist2(p) > b.dist2 {
                    continue;
                }
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    for (id, [a, b, c]) in &self.tris[*start..*end] {
                        let w = closest_point_barycentric(p, a, b, c);
                        let d = (combine(&w, a, b, c) - p).norm_squared();
                        let better = match &best {
                            None => true,
                            Some(b) => d < b.dist2 || (d == b.dist2 && *id < b.id),
                        };
                        if better {
                            best = Some(Hit {
                                dist2: d,
                                id: *id,
                                barycentric: w,
                                corners: [*a, *b, *c],
                            });
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().dist2(p);
                    let dr = self.nodes[*right].bounds().dist2(p);
                    // visit the nearer child first
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best
    }
}

fn build_node(tris: &mut [(usize, [Vec3; 3])], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let mut bounds = Aabb::empty();
    let mut centroids = Aabb::empty();
    for (_, t) in &tris[start..end] {
        for v in t {
            bounds.grow(v);
        }
        centroids.grow(&((t[0] + t[1] + t[2]) / 3.0));
    }
    let index = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return index;
    }
    let extent = centroids.hi - centroids.lo;
    let axis = extent.imax();
    let mid = start + (end - start) / 2;
    let key = |t: &(usize, [Vec3; 3])| (t.1[0][axis] + t.1[1][axis] + t.1[2][axis], t.0);
    tris[start..end].select_nth_unstable_by(mid - start, |a, b| {
        let (ka, ia) = key(a);
        let (kb, ib) = key(b);
        ka.total_cmp(&kb).then(ia.cmp(&ib))
    });
    nodes.push(Node::Leaf { bounds, start, end });
    let left = build_node(tris, start, mid, nodes);
    let right = build_node(tris, mid, end, nodes);
    let mut merged = *nodes[left].bounds();
    merged.merge(nodes[right].bounds());
    nodes[index] = Node::Inner {
        bounds: merged,
        left,
        right,
    };
    index
}

