//! Connected-component labeling (two-pass, union-find).

use crate::imaging::mask::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Per-component statistics in label order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub label: u32,
    pub area: u32,
    pub sum_x: u64,
    pub sum_y: u64,
    pub min_x: u32,
    pub min_y: u32,
    pub max_x: u32,
    pub max_y: u32,
}

/// Labels are 1-based; 0 marks background. Labels are assigned in raster
/// order of each component's first pixel.
#[derive(Debug, Clone)]
pub struct Labeling {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u32>,
    pub components: Vec<Component>,
}

impl Labeling {
    #[inline]
    pub fn label(&self, x: u32, y: u32) -> u32 {
        self.labels[y as usize * self.width as usize + x as usize]
    }
}

fn find(parent: &mut [u32], mut a: u32) -> u32 {
    while parent[a as usize] != a {
        parent[a as usize] = parent[parent[a as usize] as usize];
        a = parent[a as usize];
    }
    a
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> Labeling {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let bits = mask.as_slice();
    let mut labels = vec![0u32; w * h];
    let mut parent: Vec<u32> = vec![0];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if bits[i] == 0 {
                continue;
            }
            let mut neighbors = [0u32; 4];
            let mut n = 0;
            if x > 0 && labels[i - 1] != 0 {
                neighbors[n] = labels[i - 1];
                n += 1;
            }
            if y > 0 {
                let up = i - w;
                if labels[up] != 0 {
                    neighbors[n] = labels[up];
                    n += 1;
                }
                if connectivity == Connectivity::Eight {
                    if x > 0 && labels[up - 1] != 0 {
                        neighbors[n] = labels[up - 1];
                        n += 1;
                    }
                    if x + 1 < w && labels[up + 1] != 0 {
                        neighbors[n] = labels[up + 1];
                        n += 1;
                    }
                }
            }
            if n == 0 {
                let l = parent.len() as u32;
                parent.push(l);
                labels[i] = l;
            } else {
                let l = *neighbors[..n].iter().min().unwrap();
                labels[i] = l;
                for &o in &neighbors[..n] {
                    union(&mut parent, l, o);
                }
            }
        }
    }

    // Compact roots to 1..=k in order of first appearance.
    let mut remap = vec![0u32; parent.len()];
    let mut next = 0u32;
    let mut components: Vec<Component> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if labels[i] == 0 {
                continue;
            }
            let root = find(&mut parent, labels[i]);
            if remap[root as usize] == 0 {
                next += 1;
                remap[root as usize] = next;
                components.push(Component {
                    label: next,
                    area: 0,
                    sum_x: 0,
                    sum_y: 0,
                    min_x: x as u32,
                    min_y: y as u32,
                    max_x: x as u32,
                    max_y: y as u32,
                });
            }
            let l = remap[root as usize];
            labels[i] = l;
            let c = &mut components[l as usize - 1];
            c.area += 1;
            c.sum_x += x as u64;
            c.sum_y += y as u64;
            c.min_x = c.min_x.min(x as u32);
            c.max_x = c.max_x.max(x as u32);
            c.max_y = y as u32;
        }
    }
    Labeling { width: mask.width(), height: mask.height(), labels, components }
}

/// Removes 4-connected components smaller than `min_area` pixels.
pub fn remove_small_components(mask: &BinaryMask, min_area: u32) -> BinaryMask {
    if min_area <= 1 {
        return mask.clone();
    }
    let lab = label_components(mask, Connectivity::Four);
    let keep: Vec<bool> = std::iter::once(false)
        .chain(lab.components.iter().map(|c| c.area >= min_area))
        .collect();
    let bytes: Vec<u8> = lab.labels.iter().map(|&l| keep[l as usize] as u8).collect();
    BinaryMask::from_bytes(mask.width(), mask.height(), &bytes).expect("same dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_depend_on_connectivity() {
        let mut m = BinaryMask::new(4, 4);
        m.set(0, 0, true);
        m.set(1, 1, true);
        assert_eq!(label_components(&m, Connectivity::Four).components.len(), 2);
        assert_eq!(label_components(&m, Connectivity::Eight).components.len(), 1);
    }

    #[test]
    fn u_shape_merges() {
        // Two arms joined at the bottom get provisional labels 1 and 2.
        let m = BinaryMask::from_fn(5, 3, |x, y| x == 0 || x == 4 || y == 2);
        let lab = label_components(&m, Connectivity::Four);
        assert_eq!(lab.components.len(), 1);
        assert_eq!(lab.components[0].area, 3 + 3 + 3);
    }

    #[test]
    fn small_components_removed() {
        let mut m = BinaryMask::from_fn(10, 10, |x, y| x < 3 && y < 3);
        m.set(8, 8, true);
        let r = remove_small_components(&m, 2);
        assert_eq!(r.count(), 9);
    }
}
