/// Disjoint-set forest with path halving, union by size and per-root face
/// flags.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    flags: Vec<u8>,
    largest: u32,
}

impl UnionFind {
    pub fn new(flags: &[u8]) -> Self {
        Self {
            parent: (0..flags.len() as u32).collect(),
            size: vec![1; flags.len()],
            flags: flags.to_vec(),
            largest: u32::from(!flags.is_empty()),
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns the flags of the merged root.
    pub fn union(&mut self, a: u32, b: u32) -> u8 {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return self.flags[ra as usize];
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        self.flags[ra as usize] |= self.flags[rb as usize];
        self.largest = self.largest.max(self.size[ra as usize]);
        self.flags[ra as usize]
    }

    pub fn largest(&self) -> usize {
        self.largest as usize
    }

    pub fn set_size(&mut self, x: u32) -> usize {
        let r = self.find(x);
        self.size[r as usize] as usize
    }

    pub fn root_flags(&mut self, x: u32) -> u8 {
        let r = self.find(x);
        self.flags[r as usize]
    }
}
