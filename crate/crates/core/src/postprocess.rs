//! Mask clean-up: hole filling, small non-sky object removal and column snap,
//! combined into the two post-processing pipelines.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

impl std::str::FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "4" => Ok(Connectivity::Four),
            "8" => Ok(Connectivity::Eight),
            other => Err(Error::config(format!(
                "connectivity must be 4 or 8, got `{other}`"
            ))),
        }
    }
}

/// Labels of the connected components of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub rows: usize,
    pub cols: usize,
    /// Row-major; 0 for pixels outside the target class, otherwise `1..=K`.
    pub component_id: Vec<usize>,
    /// `component_areas[k - 1]` is the pixel count of component `k`.
    pub component_areas: Vec<usize>,
}

impl ComponentLabeling {
    pub fn count(&self) -> usize {
        self.component_areas.len()
    }

    pub fn area(&self, id: usize) -> usize {
        self.component_areas[id - 1]
    }

    pub fn largest_area(&self) -> Option<usize> {
        self.component_areas.iter().copied().max()
    }
}

/// Breadth-first labeling; ids follow the raster order of each component's
/// first pixel.
pub fn connected_components(
    m: &BinaryMask,
    target: Label,
    connectivity: Connectivity,
) -> ComponentLabeling {
    let (rows, cols) = (m.rows(), m.cols());
    let mut component_id = vec![0usize; rows * cols];
    let mut component_areas = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..rows * cols {
        if m.labels()[start] != target || component_id[start] != 0 {
            continue;
        }
        let id = component_areas.len() + 1;
        let mut area = 0;
        component_id[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            area += 1;
            let (r, c) = ((i / cols) as isize, (i % cols) as isize);
            for &(dr, dc) in connectivity.offsets() {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                    continue;
                }
                let j = nr as usize * cols + nc as usize;
                if m.labels()[j] == target && component_id[j] == 0 {
                    component_id[j] = id;
                    queue.push_back(j);
                }
            }
        }
        component_areas.push(area);
    }
    ComponentLabeling {
        rows,
        cols,
        component_id,
        component_areas,
    }
}

/// Relabels every SKY component that touches none of the four image borders
/// as NONSKY.
pub fn fill_holes(m: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
    let (rows, cols) = (m.rows(), m.cols());
    let labeling = connected_components(m, Label::Sky, connectivity);
    let mut touches_border = vec![false; labeling.count() + 1];
    for r in 0..rows {
        for c in 0..cols {
            if r == 0 || c == 0 || r == rows - 1 || c == cols - 1 {
                touches_border[labeling.component_id[r * cols + c]] = true;
            }
        }
    }
    let labels = m
        .labels()
        .iter()
        .zip(&labeling.component_id)
        .map(|(&l, &id)| {
            if id != 0 && !touches_border[id] {
                Label::NonSky
            } else {
                l
            }
        })
        .collect();
    BinaryMask::from_parts(rows, cols, labels)
}

/// Relabels as SKY every NONSKY component whose area is strictly below half
/// of the largest NONSKY component.
pub fn remove_small_nonsky(m: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
    let labeling = connected_components(m, Label::NonSky, connectivity);
    let Some(largest) = labeling.largest_area() else {
        return m.clone();
    };
    let keep: Vec<bool> = std::iter::once(false)
        .chain(
            labeling
                .component_areas
                .iter()
                // area < 0.5 * largest, in integers
                .map(|&a| 2 * a >= largest),
        )
        .collect();
    let labels = m
        .labels()
        .iter()
        .zip(&labeling.component_id)
        .map(
            |(&l, &id)| {
                if id != 0 && !keep[id] {
                    Label::Sky
                } else {
                    l
                }
            },
        )
        .collect();
    BinaryMask::from_parts(m.rows(), m.cols(), labels)
}

/// Per column, everything from the topmost NONSKY pixel down becomes
/// NONSKY. All-SKY columns are left alone.
pub fn column_snap(m: &BinaryMask) -> BinaryMask {
    let (rows, cols) = (m.rows(), m.cols());
    let mut labels = m.clone().into_labels();
    for c in 0..cols {
        if let Some(top) = (0..rows).find(|&r| labels[r * cols + c] == Label::NonSky) {
            for r in top..rows {
                labels[r * cols + c] = Label::NonSky;
            }
        }
    }
    BinaryMask::from_parts(rows, cols, labels)
}

/// Hole filling followed by small-object removal.
pub fn postprocess_i(m: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
    remove_small_nonsky(&fill_holes(m, connectivity), connectivity)
}

/// Small-object removal followed by column snap.
pub fn postprocess_ii(m: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
    column_snap(&remove_small_nonsky(m, connectivity))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PostProcess {
    #[default]
    None,
    Pp1,
    Pp2,
}

impl PostProcess {
    pub fn apply(self, m: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
        match self {
            PostProcess::None => m.clone(),
            PostProcess::Pp1 => postprocess_i(m, connectivity),
            PostProcess::Pp2 => postprocess_ii(m, connectivity),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PostProcess::None => "none",
            PostProcess::Pp1 => "pp1",
            PostProcess::Pp2 => "pp2",
        }
    }
}

impl std::str::FromStr for PostProcess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PostProcess::None),
            "pp1" => Ok(PostProcess::Pp1),
            "pp2" => Ok(PostProcess::Pp2),
            other => Err(Error::config(format!(
                "unknown post-processing `{other}` (expected none|pp1|pp2)"
            ))),
        }
    }
}
