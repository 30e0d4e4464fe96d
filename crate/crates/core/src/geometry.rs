//! Finite simplicial complexes with per-simplex media.
//!
//! A complex is a list of `n`-simplices over a vertex table in `R^n`. Each
//! `(n-1)`-face is either an interface (shared by two `n`-simplices) or a
//! boundary facet (owned by one). Faces are identified by their sorted vertex
//! index tuple, so orientation never matters.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Index into a scenario's medium table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MediumId(pub usize);

/// Canonical face: vertex indices in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Face(Vec<usize>);

impl Face {
    pub fn new(mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        Face(vertices)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// Dimension of the face (`k` for a `k`-simplex).
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("complex is empty")]
    Empty,
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("vertex {vertex} has {got} coordinates, expected {expected}")]
    CoordinateLength {
        vertex: usize,
        got: usize,
        expected: usize,
    },
    #[error("simplex {simplex} has {got} vertices, expected {expected}")]
    SimplexArity {
        simplex: usize,
        got: usize,
        expected: usize,
    },
    #[error("simplex {simplex} repeats a vertex index")]
    RepeatedVertex { simplex: usize },
    #[error("simplex {simplex} references unknown vertex {vertex}")]
    UnknownVertex { simplex: usize, vertex: usize },
    #[error("vertex {0} is not contained in any top-dimensional simplex")]
    DimensionalInhomogeneity(usize),
    #[error("facet {facet:?} is shared by {count} top-dimensional simplices")]
    FacetOvercount { facet: Vec<usize>, count: usize },
    #[error("simplex {0} is degenerate (zero volume)")]
    DegenerateSimplex(usize),
    #[error("simplices {0} and {1} are identical")]
    DuplicateSimplex(usize, usize),
    #[error("simplex {0} has no medium assigned")]
    MissingMedium(usize),
    #[error("medium assigned to unknown simplex {0}")]
    UnknownSimplex(usize),
    #[error("k = {k} is outside 0..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("unknown vertex {0}")]
    UnknownVertexQuery(usize),
}

/// An interface facet together with the two simplices it separates
/// (lower simplex index first).
#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    pub facet_id: usize,
    pub facet: Face,
    pub simplices: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFacet {
    pub facet_id: usize,
    pub facet: Face,
    pub simplex: usize,
}

/// Partition of the `(n-1)`-skeleton. Facet ids are positions in the sorted
/// `(n-1)`-skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetClassification {
    pub interfaces: Vec<Interface>,
    pub boundary_facets: Vec<BoundaryFacet>,
}

/// Validated, immutable simplicial complex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialComplex {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    media: BTreeMap<usize, MediumId>,
    /// facet -> incident simplex indices (one or two)
    facets: BTreeMap<Face, Vec<usize>>,
}

/// Relative volume threshold below which a simplex counts as degenerate.
const DEGENERACY_EPS: f64 = 1e-12;

impl SimplicialComplex {
    /// Validates and builds a complex. `media` may be empty; when it is not,
    /// every simplex must have an entry.
    pub fn build(
        dim: usize,
        vertices: Vec<Vec<f64>>,
        simplices: Vec<Vec<usize>>,
        media: BTreeMap<usize, MediumId>,
    ) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        if vertices.is_empty() || simplices.is_empty() {
            return Err(GeometryError::Empty);
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(GeometryError::CoordinateLength {
                    vertex: i,
                    got: v.len(),
                    expected: dim,
                });
            }
        }

        let mut seen: BTreeMap<Face, usize> = BTreeMap::new();
        for (s, simplex) in simplices.iter().enumerate() {
            if simplex.len() != dim + 1 {
                return Err(GeometryError::SimplexArity {
                    simplex: s,
                    got: simplex.len(),
                    expected: dim + 1,
                });
            }
            if let Some(&v) = simplex.iter().find(|&&v| v >= vertices.len()) {
                return Err(GeometryError::UnknownVertex {
                    simplex: s,
                    vertex: v,
                });
            }
            let face = Face::new(simplex.clone());
            if face.0.windows(2).any(|w| w[0] == w[1]) {
                return Err(GeometryError::RepeatedVertex { simplex: s });
            }
            if let Some(&first) = seen.get(&face) {
                return Err(GeometryError::DuplicateSimplex(first, s));
            }
            seen.insert(face, s);
            if relative_volume(&vertices, simplex) <= DEGENERACY_EPS {
                return Err(GeometryError::DegenerateSimplex(s));
            }
        }

        let mut used = vec![false; vertices.len()];
        for simplex in &simplices {
            for &v in simplex {
                used[v] = true;
            }
        }
        if let Some(orphan) = used.iter().position(|u| !u) {
            return Err(GeometryError::DimensionalInhomogeneity(orphan));
        }

        let mut facets: BTreeMap<Face, Vec<usize>> = BTreeMap::new();
        for (s, simplex) in simplices.iter().enumerate() {
            for skip in 0..simplex.len() {
                let facet: Vec<usize> = simplex
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                facets.entry(Face::new(facet)).or_default().push(s);
            }
        }
        if let Some((facet, owners)) = facets.iter().find(|(_, owners)| owners.len() > 2) {
            return Err(GeometryError::FacetOvercount {
                facet: facet.0.clone(),
                count: owners.len(),
            });
        }

        if !media.is_empty() {
            if let Some(&s) = media.keys().find(|&&s| s >= simplices.len()) {
                return Err(GeometryError::UnknownSimplex(s));
            }
            if let Some(s) = (0..simplices.len()).find(|s| !media.contains_key(s)) {
                return Err(GeometryError::MissingMedium(s));
            }
        }

        Ok(Self {
            dim,
            vertices,
            simplices,
            media,
            facets,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn media(&self) -> &BTreeMap<usize, MediumId> {
        &self.media
    }

    pub fn medium_of(&self, simplex: usize) -> Option<MediumId> {
        self.media.get(&simplex).copied()
    }

    /// Labels every `(n-1)`-face as interface or boundary.
    pub fn classify_facets(&self) -> FacetClassification {
        let mut interfaces = Vec::new();
        let mut boundary_facets = Vec::new();
        for (facet_id, (facet, owners)) in self.facets.iter().enumerate() {
            match owners.as_slice() {
                [a, b] => interfaces.push(Interface {
                    facet_id,
                    facet: facet.clone(),
                    simplices: ((*a).min(*b), (*a).max(*b)),
                }),
                [s] => boundary_facets.push(BoundaryFacet {
                    facet_id,
                    facet: facet.clone(),
                    simplex: *s,
                }),
                _ => unreachable!("facet incidence validated at build time"),
            }
        }
        FacetClassification {
            interfaces,
            boundary_facets,
        }
    }

    /// All distinct `k`-faces, in ascending canonical order.
    pub fn k_skeleton(&self, k: usize) -> Result<Vec<Face>, GeometryError> {
        if k > self.dim {
            return Err(GeometryError::KOutOfRange { k, n: self.dim });
        }
        let mut faces = BTreeSet::new();
        for simplex in &self.simplices {
            let sorted = Face::new(simplex.clone());
            for_each_combination(&sorted.0, k + 1, &mut |c| {
                faces.insert(Face(c.to_vec()));
            });
        }
        Ok(faces.into_iter().collect())
    }

    /// Interfaces whose vertex set contains `v`, in ascending facet id.
    pub fn vertex_star_interfaces<'a>(
        &self,
        classification: &'a FacetClassification,
        v: usize,
    ) -> Result<Vec<&'a Interface>, GeometryError> {
        if v >= self.vertices.len() {
            return Err(GeometryError::UnknownVertexQuery(v));
        }
        Ok(classification
            .interfaces
            .iter()
            .filter(|i| i.facet.contains(v))
            .collect())
    }

    /// Affine map to barycentric coordinates of simplex `s`: returns
    /// `(inverse edge matrix, base vertex)`; `lambda_i = row_i(E^-1) (p - v0)`
    /// for `i >= 1` and `lambda_0 = 1 - sum`.
    pub(crate) fn barycentric_frame(&self, s: usize) -> (DMatrix<f64>, DVector<f64>) {
        let simplex = &self.simplices[s];
        let base = DVector::from_column_slice(&self.vertices[simplex[0]]);
        let edges = DMatrix::from_fn(self.dim, self.dim, |r, c| {
            self.vertices[simplex[c + 1]][r] - base[r]
        });
        let inv = edges
            .try_inverse()
            .expect("non-degenerate simplex has an invertible edge matrix");
        (inv, base)
    }

    /// Facet of `s` opposite local vertex `local`.
    pub(crate) fn facet_opposite(&self, s: usize, local: usize) -> Face {
        Face::new(
            self.simplices[s]
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != local)
                .map(|(_, &v)| v)
                .collect(),
        )
    }

    pub(crate) fn facet_owners(&self, facet: &Face) -> Option<&[usize]> {
        self.facets.get(facet).map(Vec::as_slice)
    }
}

/// Free-function form of [`SimplicialComplex::build`].
pub fn build_complex(
    dim: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    media: BTreeMap<usize, MediumId>,
) -> Result<SimplicialComplex, GeometryError> {
    SimplicialComplex::build(dim, vertices, simplices, media)
}

pub fn classify_facets(c: &SimplicialComplex) -> FacetClassification {
    c.classify_facets()
}

pub fn k_skeleton(c: &SimplicialComplex, k: usize) -> Result<Vec<Face>, GeometryError> {
    c.k_skeleton(k)
}

pub fn vertex_star_interfaces<'a>(
    c: &SimplicialComplex,
    f: &'a FacetClassification,
    v: usize,
) -> Result<Vec<&'a Interface>, GeometryError> {
    c.vertex_star_interfaces(f, v)
}

fn for_each_combination(items: &[usize], size: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(
        items: &[usize],
        size: usize,
        start: usize,
        acc: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if acc.len() == size {
            f(acc);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < size - acc.len() {
                break;
            }
            acc.push(items[i]);
            rec(items, size, i + 1, acc, f);
            acc.pop();
        }
    }
    rec(items, size, 0, &mut Vec::with_capacity(size), f);
}

/// `|det E| / prod |e_i|`: 1 for orthogonal edges, 0 for a flat simplex.
fn relative_volume(vertices: &[Vec<f64>], simplex: &[usize]) -> f64 {
    let dim = vertices[simplex[0]].len();
    let base = &vertices[simplex[0]];
    let edges = DMatrix::from_fn(dim, dim, |r, c| vertices[simplex[c + 1]][r] - base[r]);
    let norms: f64 = edges.column_iter().map(|c| c.norm()).product();
    if norms == 0.0 {
        return 0.0;
    }
    edges.determinant().abs() / norms
}
