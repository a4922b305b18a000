//! Dense fields over rectangular windows of Z^m (m <= 3).
//!
//! Axes are numbered from 1, matching the lattice-shift subscripts
//! (`f_1(z) = f(z + e_1)`). Windows are half-open boxes and are iterated
//! lexicographically with axis 1 slowest; the same order is used for the flat
//! `values` array in JSON.

use std::fmt;
use std::ops::Index;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::Point3;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex {
    dim: u8,
    c: [i64; 3],
}

impl GridIndex {
    pub fn new(coords: &[i64]) -> Self {
        assert!(coords.len() <= 3, "lattices have at most three axes");
        let mut c = [0; 3];
        c[..coords.len()].copy_from_slice(coords);
        GridIndex {
            dim: coords.len() as u8,
            c,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i64] {
        &self.c[..self.dim()]
    }

    /// Coordinate along `axis` (1-based).
    pub fn get(&self, axis: usize) -> i64 {
        self.c[axis - 1]
    }

    /// Unchecked shift by `k` along `axis`.
    pub fn offset(mut self, axis: usize, k: i64) -> Self {
        assert!((1..=self.dim()).contains(&axis), "axis {axis} out of range");
        self.c[axis - 1] += k;
        self
    }

    /// Parity of the coordinate sum; `true` for black (even) vertices.
    pub fn is_even(&self) -> bool {
        self.coords().iter().sum::<i64>().rem_euclid(2) == 0
    }
}

pub fn ix2(i: i64, j: i64) -> GridIndex {
    GridIndex::new(&[i, j])
}

pub fn ix3(i: i64, j: i64, k: i64) -> GridIndex {
    GridIndex::new(&[i, j, k])
}

impl fmt::Debug for GridIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for GridIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords().iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Serialize for GridIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i64>::deserialize(d)?;
        if v.len() > 3 {
            return Err(serde::de::Error::custom(
                "grid index has more than three axes",
            ));
        }
        Ok(GridIndex::new(&v))
    }
}

/// Half-open integer box `[lo_a, hi_a)` per axis.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    dim: u8,
    lo: [i64; 3],
    hi: [i64; 3],
}

impl Window {
    pub fn new(bounds: &[(i64, i64)]) -> Result<Self> {
        if bounds.len() > 3 {
            return Err(Error::Shape("at most three axes".into()));
        }
        let mut w = Window {
            dim: bounds.len() as u8,
            lo: [0; 3],
            hi: [0; 3],
        };
        for (a, &(lo, hi)) in bounds.iter().enumerate() {
            if hi < lo {
                return Err(Error::Shape(format!("axis {} has hi < lo", a + 1)));
            }
            w.lo[a] = lo;
            w.hi[a] = hi;
        }
        Ok(w)
    }

    /// Window `[0, n_1) x ... x [0, n_m)`.
    pub fn sized(extent: &[usize]) -> Self {
        let b: Vec<(i64, i64)> = extent.iter().map(|&n| (0, n as i64)).collect();
        Window::new(&b).expect("valid extents")
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn lo(&self, axis: usize) -> i64 {
        self.lo[axis - 1]
    }

    pub fn hi(&self, axis: usize) -> i64 {
        self.hi[axis - 1]
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.hi[axis - 1] - self.lo[axis - 1]) as usize
    }

    pub fn origin(&self) -> GridIndex {
        GridIndex::new(&self.lo[..self.dim()])
    }

    pub fn len(&self) -> usize {
        (1..=self.dim()).map(|a| self.extent(a)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, idx: GridIndex) -> bool {
        idx.dim() == self.dim()
            && (0..self.dim()).all(|a| self.lo[a] <= idx.c[a] && idx.c[a] < self.hi[a])
    }

    pub fn linear(&self, idx: GridIndex) -> Option<usize> {
        if !self.contains(idx) {
            return None;
        }
        let mut k = 0usize;
        for a in 0..self.dim() {
            k = k * (self.hi[a] - self.lo[a]) as usize + (idx.c[a] - self.lo[a]) as usize;
        }
        Some(k)
    }

    pub fn index_at(&self, mut k: usize) -> GridIndex {
        let mut c = [0i64; 3];
        for a in (0..self.dim()).rev() {
            let n = (self.hi[a] - self.lo[a]) as usize;
            c[a] = self.lo[a] + (k % n) as i64;
            k /= n;
        }
        GridIndex { dim: self.dim, c }
    }

    /// Lexicographic iteration, axis 1 slowest.
    pub fn indices(&self) -> impl Iterator<Item = GridIndex> + '_ {
        (0..self.len()).map(move |k| self.index_at(k))
    }

    /// Bounds-checked shift of `idx` by `k` along `axis`.
    pub fn shift(&self, idx: GridIndex, axis: usize, k: i64) -> Result<GridIndex> {
        if axis == 0 || axis > idx.dim() {
            return Err(Error::Invalid(format!("axis {axis} out of range")));
        }
        let out = idx.offset(axis, k);
        if self.contains(out) {
            Ok(out)
        } else {
            Err(Error::OutOfWindow { index: out })
        }
    }

    /// Window shrunk by `by` cells at the top of `axis`.
    pub fn shrink(&self, axis: usize, by: i64) -> Window {
        let mut w = *self;
        w.hi[axis - 1] = (w.hi[axis - 1] - by).max(w.lo[axis - 1]);
        w
    }

    /// Anchor window of the elementary quadrilaterals in the plane `(i, j)`.
    pub fn faces(&self, plane: (usize, usize)) -> Window {
        self.shrink(plane.0, 1).shrink(plane.1, 1)
    }

    pub fn bounds(&self) -> Vec<[i64; 2]> {
        (0..self.dim()).map(|a| [self.lo[a], self.hi[a]]).collect()
    }
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Window{:?}", self.bounds())
    }
}

/// Dense field with a per-cell "unset" state.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    window: Window,
    values: Vec<Option<T>>,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<Point3>;

impl<T: Copy> Field<T> {
    pub fn unset(window: Window) -> Self {
        Field {
            window,
            values: vec![None; window.len()],
        }
    }

    pub fn filled(window: Window, v: T) -> Self {
        Field {
            window,
            values: vec![Some(v); window.len()],
        }
    }

    pub fn from_fn(window: Window, mut f: impl FnMut(GridIndex) -> T) -> Self {
        let values = window.indices().map(|i| Some(f(i))).collect();
        Field { window, values }
    }

    pub fn from_values(window: Window, values: Vec<Option<T>>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::Shape(format!(
                "window holds {} cells, got {} values",
                window.len(),
                values.len()
            )));
        }
        Ok(Field { window, values })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn get(&self, idx: GridIndex) -> Result<T> {
        let k = self
            .window
            .linear(idx)
            .ok_or(Error::OutOfWindow { index: idx })?;
        self.values[k].ok_or(Error::Unset { index: idx })
    }

    /// Value or `None` when outside the window or unset.
    pub fn try_at(&self, idx: GridIndex) -> Option<T> {
        self.window.linear(idx).and_then(|k| self.values[k])
    }

    pub fn is_set(&self, idx: GridIndex) -> bool {
        self.try_at(idx).is_some()
    }

    pub fn set(&mut self, idx: GridIndex, v: T) -> Result<()> {
        let k = self
            .window
            .linear(idx)
            .ok_or(Error::OutOfWindow { index: idx })?;
        self.values[k] = Some(v);
        Ok(())
    }

    pub fn first_unset(&self) -> Option<GridIndex> {
        self.values
            .iter()
            .position(Option::is_none)
            .map(|k| self.window.index_at(k))
    }

    pub fn ensure_complete(&self) -> Result<()> {
        match self.first_unset() {
            Some(index) => Err(Error::Unset { index }),
            None => Ok(()),
        }
    }

    pub fn raw(&self) -> &[Option<T>] {
        &self.values
    }

    /// `(index, value)` pairs of all set cells in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (GridIndex, T)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(move |(k, v)| v.map(|v| (self.window.index_at(k), v)))
    }

    pub fn map<U: Copy>(&self, mut f: impl FnMut(T) -> U) -> Field<U> {
        Field {
            window: self.window,
            values: self.values.iter().map(|v| v.map(&mut f)).collect(),
        }
    }

    /// Restriction to a sub-window; cells outside `self` become unset.
    pub fn restrict(&self, window: Window) -> Field<T> {
        let values = window.indices().map(|i| self.try_at(i)).collect();
        Field { window, values }
    }

    /// Restriction to the coordinate subspace spanned by `axes` through the
    /// window origin. Other axes keep their coordinate with extent one, so
    /// indices are unchanged.
    pub fn axis_slice(&self, axes: &[usize]) -> Result<Field<T>> {
        let dim = self.window.dim();
        if let Some(&bad) = axes.iter().find(|&&a| a == 0 || a > dim) {
            return Err(Error::Invalid(format!("axis {bad} out of range")));
        }
        let bounds: Vec<(i64, i64)> = (1..=dim)
            .map(|a| {
                let lo = self.window.lo(a);
                if axes.contains(&a) {
                    (lo, self.window.hi(a))
                } else {
                    (lo, (lo + 1).min(self.window.hi(a)))
                }
            })
            .collect();
        Ok(self.restrict(Window::new(&bounds)?))
    }
}

impl<T: Copy> Index<GridIndex> for Field<T> {
    type Output = T;

    fn index(&self, idx: GridIndex) -> &T {
        let k = self
            .window
            .linear(idx)
            .unwrap_or_else(|| panic!("{idx} outside {:?}", self.window));
        self.values[k]
            .as_ref()
            .unwrap_or_else(|| panic!("read of unset cell {idx}"))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldDoc<T> {
    window: Vec<[i64; 2]>,
    values: Vec<Option<T>>,
}

impl<T: Copy + Serialize> Serialize for Field<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldDoc {
            window: self.window.bounds(),
            values: self.values.clone(),
        }
        .serialize(s)
    }
}

impl<'de, T: Copy + DeserializeOwned> Deserialize<'de> for Field<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = FieldDoc::<T>::deserialize(d)?;
        let b: Vec<(i64, i64)> = doc.window.iter().map(|w| (w[0], w[1])).collect();
        let window = Window::new(&b).map_err(serde::de::Error::custom)?;
        Field::from_values(window, doc.values).map_err(serde::de::Error::custom)
    }
}

/// Scalar per elementary quadrilateral of the plane `(i, j)`, `i < j`,
/// anchored at the quadrilateral's lowest corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceField {
    pub plane: (usize, usize),
    pub values: ScalarField,
}

impl FaceField {
    pub fn new(plane: (usize, usize), values: ScalarField) -> Result<Self> {
        if !(plane.0 >= 1 && plane.0 < plane.1 && plane.1 <= values.window().dim()) {
            return Err(Error::Invalid(format!("bad plane pair {plane:?}")));
        }
        Ok(FaceField { plane, values })
    }

    /// Unset face field for all quadrilaterals of a vertex window.
    pub fn unset_over(vertices: &Window, plane: (usize, usize)) -> Self {
        FaceField {
            plane,
            values: ScalarField::unset(vertices.faces(plane)),
        }
    }

    pub fn filled_over(vertices: &Window, plane: (usize, usize), v: f64) -> Self {
        FaceField {
            plane,
            values: ScalarField::filled(vertices.faces(plane), v),
        }
    }

    pub fn get(&self, anchor: GridIndex) -> Result<f64> {
        self.values.get(anchor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifts() {
        let w2 = Window::sized(&[3, 3]);
        assert_eq!(w2.shift(ix2(0, 0), 1, 1).unwrap(), ix2(1, 0));
        let w3 = Window::sized(&[3, 3, 2]);
        assert_eq!(w3.shift(ix3(1, 2, 0), 3, 1).unwrap(), ix3(1, 2, 1));
        assert!(matches!(
            w2.shift(ix2(0, 0), 1, -1),
            Err(Error::OutOfWindow { .. })
        ));
    }

    #[test]
    fn lexicographic_order() {
        let w = Window::new(&[(1, 3), (-1, 1)]).unwrap();
        let v: Vec<GridIndex> = w.indices().collect();
        assert_eq!(v, vec![ix2(1, -1), ix2(1, 0), ix2(2, -1), ix2(2, 0)]);
        for (k, i) in v.iter().enumerate() {
            assert_eq!(w.linear(*i), Some(k));
        }
    }

    #[test]
    fn slices() {
        let w = Window::sized(&[3, 4]);
        let f = ScalarField::from_fn(w, |i| (10 * i.get(1) + i.get(2)) as f64);
        let row = f.axis_slice(&[1]).unwrap();
        assert_eq!(row.window().extent(1), 3);
        assert_eq!(row.window().extent(2), 1);
        assert_eq!(row[ix2(2, 0)], 20.0);

        let w3 = Window::sized(&[2, 2, 2]);
        let g = ScalarField::from_fn(w3, |i| i.get(3) as f64);
        let bottom = g.axis_slice(&[1, 2]).unwrap();
        assert_eq!(bottom.window().len(), 4);
        assert!(bottom.iter().all(|(_, v)| v == 0.0));

        let o = f.axis_slice(&[]).unwrap();
        assert_eq!(o.window().len(), 1);
        assert_eq!(o[ix2(0, 0)], 0.0);
    }

    #[test]
    fn unset_cells_are_tracked() {
        let mut f = ScalarField::unset(Window::sized(&[2, 2]));
        assert_eq!(f.first_unset(), Some(ix2(0, 0)));
        for i in Window::sized(&[2, 2]).indices() {
            f.set(i, 1.0).unwrap();
        }
        assert!(f.ensure_complete().is_ok());
        assert!(matches!(f.get(ix2(2, 0)), Err(Error::OutOfWindow { .. })));
    }

    #[test]
    fn json_round_trip() {
        let w = Window::new(&[(0, 2), (1, 3)]).unwrap();
        let mut f = ScalarField::from_fn(w, |i| 0.1 * i.get(2) as f64);
        f.values[3] = None;
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"window":[[0,2],[1,3]],"values":[0.1,0.2,0.1,null]}"#);
        let back: ScalarField = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(
            serde_json::from_str::<ScalarField>(r#"{"window":[[0,1]],"values":[],"x":1}"#).is_err()
        );
    }
}
