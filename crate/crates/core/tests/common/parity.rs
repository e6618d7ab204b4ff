//! Zielonka's recursive algorithm for max-parity games. Player 0 wins a play
//! when the largest priority seen infinitely often is even.

#[derive(Default)]
pub struct Game {
    pub owner: Vec<u8>,
    pub prio: Vec<u32>,
    pub succ: Vec<Vec<usize>>,
}

impl Game {
    pub fn add(&mut self, owner: u8, prio: u32) -> usize {
        self.owner.push(owner);
        self.prio.push(prio);
        self.succ.push(vec![]);
        self.owner.len() - 1
    }

    /// Winning region of player 0. Every node needs a successor.
    pub fn solve(&self) -> Vec<bool> {
        assert!(self.succ.iter().all(|s| !s.is_empty()), "dead end in parity game");
        let n = self.owner.len();
        let mut pred = vec![vec![]; n];
        for (v, ss) in self.succ.iter().enumerate() {
            for &w in ss {
                pred[w].push(v);
            }
        }
        let (w0, _) = self.zielonka(&vec![true; n], &pred);
        w0
    }

    fn attractor(&self, alive: &[bool], target: &[bool], player: u8, pred: &[Vec<usize>]) -> Vec<bool> {
        let n = alive.len();
        let mut attr = target.to_vec();
        // successors still outside the attractor, for opponent nodes
        let mut remaining: Vec<usize> =
            (0..n).map(|v| self.succ[v].iter().filter(|&&w| alive[w]).count()).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&v| attr[v]).collect();
        while let Some(w) = stack.pop() {
            for &v in &pred[w] {
                if !alive[v] || attr[v] {
                    continue;
                }
                let pull = if self.owner[v] == player {
                    true
                } else {
                    remaining[v] -= 1;
                    remaining[v] == 0
                };
                if pull {
                    attr[v] = true;
                    stack.push(v);
                }
            }
        }
        attr
    }

    fn zielonka(&self, alive: &[bool], pred: &[Vec<usize>]) -> (Vec<bool>, Vec<bool>) {
        let n = alive.len();
        let Some(p) = (0..n).filter(|&v| alive[v]).map(|v| self.prio[v]).max() else {
            return (vec![false; n], vec![false; n]);
        };
        let i = (p % 2) as u8;
        let top: Vec<bool> = (0..n).map(|v| alive[v] && self.prio[v] == p).collect();
        let a = self.attractor(alive, &top, i, pred);
        let sub: Vec<bool> = (0..n).map(|v| alive[v] && !a[v]).collect();
        let (w0, w1) = self.zielonka(&sub, pred);
        let (wi, wo) = if i == 0 { (w0, w1) } else { (w1, w0) };
        let _ = wi;
        if !wo.iter().any(|&b| b) {
            let all = alive.to_vec();
            let none = vec![false; n];
            return if i == 0 { (all, none) } else { (none, all) };
        }
        let b = self.attractor(alive, &wo, 1 - i, pred);
        let sub: Vec<bool> = (0..n).map(|v| alive[v] && !b[v]).collect();
        let (w0, w1) = self.zielonka(&sub, pred);
        let (wi2, wo2) = if i == 0 { (w0, w1) } else { (w1, w0) };
        let wo_total: Vec<bool> = (0..n).map(|v| wo2[v] || b[v]).collect();
        if i == 0 {
            (wi2, wo_total)
        } else {
            (wo_total, wi2)
        }
    }
}

