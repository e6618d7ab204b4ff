//! GR(1) fixed points over an explicit arena.
//!
//! The system region is the usual triple fixpoint
//! `νZ. ⋀_j μY. ⋁_i νX. (J^s_j ∧ cpre Z) ∨ cpre Y ∨ (¬J^e_i ∧ cpre X)`;
//! the environment region is computed separately from the dual formula so the
//! two can be cross-checked (they must partition the arena).

use super::arena::GameGraph;

pub const UNRANKED: u32 = u32::MAX;

/// System-side solution plus the ranking data needed to extract a strategy.
#[derive(Clone, Debug)]
pub struct SysSolution {
    pub winning: Vec<bool>,
    /// `rank[j][s]`: index of the first Y-ring containing `s` for goal `j`.
    pub rank: Vec<Vec<u32>>,
    /// `env_goal[j][s]`: least env goal index whose X-set holds `s` at its rank.
    pub env_goal: Vec<Vec<u32>>,
    /// `progress[j][s]`: `s` entered its ring by reaching the goal or a lower
    /// ring, not by waiting on an env goal. Preferred among equal ranks so the
    /// controller does not idle when it could move.
    pub progress: Vec<Vec<bool>>,
}

/// Environment-side solution for counterstrategy extraction.
#[derive(Clone, Debug)]
pub struct EnvSolution {
    pub winning: Vec<bool>,
    /// Outer (μZ) level of each state, `UNRANKED` outside the region.
    pub level: Vec<u32>,
    /// `starve[k][j][s]`: state lies in the ν-region starving sys goal `j` at level `k`.
    pub starve: Vec<Vec<Vec<bool>>>,
    /// `reach[k][j][i][s]`: μX level for env goal `i` inside that region.
    pub reach: Vec<Vec<Vec<Vec<u32>>>>,
}

fn goals_or_true(goals: &[Vec<bool>], n: usize) -> Vec<Vec<bool>> {
    if goals.is_empty() {
        vec![vec![true; n]]
    } else {
        goals.to_vec()
    }
}

impl GameGraph {
    /// States from which the system can force the next state into `target`.
    pub fn cpre(&self, target: &[bool]) -> Vec<bool> {
        (0..self.n_states())
            .map(|s| self.sys_moves[s].iter().all(|replies| replies.iter().any(|&t| target[t as usize])))
            .collect()
    }

    /// States from which the environment can force the next state into `target`.
    pub fn epre(&self, target: &[bool]) -> Vec<bool> {
        (0..self.n_states())
            .map(|s| self.sys_moves[s].iter().any(|replies| replies.iter().all(|&t| target[t as usize])))
            .collect()
    }

    pub fn sys_goal_sets(&self) -> Vec<Vec<bool>> {
        goals_or_true(&self.sys_goals, self.n_states())
    }

    pub fn env_goal_sets(&self) -> Vec<Vec<bool>> {
        goals_or_true(&self.env_goals, self.n_states())
    }

    pub fn solve_sys(&self) -> SysSolution {
        let n = self.n_states();
        let sys_goals = self.sys_goal_sets();
        let env_goals = self.env_goal_sets();
        let mut z = vec![true; n];
        loop {
            let cpre_z = self.cpre(&z);
            let mut next_z = vec![true; n];
            let mut rank = Vec::new();
            let mut env_goal = Vec::new();
            let mut progress = Vec::new();
            for goal in &sys_goals {
                let (y, r, i, p) = self.reach_goal(goal, &cpre_z, &env_goals);
                progress.push(p);
                for s in 0..n {
                    next_z[s] &= y[s];
                }
                rank.push(r);
                env_goal.push(i);
            }
            if next_z == z {
                return SysSolution { winning: z, rank, env_goal, progress };
            }
            z = next_z;
        }
    }

    /// μY for one system goal with Z fixed (given as `cpre_z`).
    fn reach_goal(
        &self,
        goal: &[bool],
        cpre_z: &[bool],
        env_goals: &[Vec<bool>],
    ) -> (Vec<bool>, Vec<u32>, Vec<u32>, Vec<bool>) {
        let n = self.n_states();
        let mut y = vec![false; n];
        let mut progress = vec![false; n];
        let mut rank = vec![UNRANKED; n];
        let mut which = vec![UNRANKED; n];
        let mut ring = 0u32;
        loop {
            let cpre_y = self.cpre(&y);
            let base: Vec<bool> = (0..n).map(|s| (goal[s] && cpre_z[s]) || cpre_y[s]).collect();
            let mut next_y = vec![false; n];
            for (i, env_goal) in env_goals.iter().enumerate() {
                let mut x = vec![true; n];
                loop {
                    let cpre_x = self.cpre(&x);
                    let next_x: Vec<bool> =
                        (0..n).map(|s| base[s] || (!env_goal[s] && cpre_x[s])).collect();
                    if next_x == x {
                        break;
                    }
                    x = next_x;
                }
                for s in 0..n {
                    if x[s] {
                        next_y[s] = true;
                        if rank[s] == UNRANKED && which[s] == UNRANKED {
                            which[s] = i as u32;
                        }
                    }
                }
            }
            for s in 0..n {
                if next_y[s] && rank[s] == UNRANKED {
                    rank[s] = ring;
                    progress[s] = base[s];
                }
            }
            if next_y == y {
                // states never ranked keep UNRANKED in both arrays
                for s in 0..n {
                    if rank[s] == UNRANKED {
                        which[s] = UNRANKED;
                    }
                }
                return (y, rank, which, progress);
            }
            y = next_y;
            ring += 1;
        }
    }

    pub fn solve_env(&self) -> EnvSolution {
        let n = self.n_states();
        let sys_goals = self.sys_goal_sets();
        let env_goals = self.env_goal_sets();
        let mut w = vec![false; n];
        let mut level = vec![UNRANKED; n];
        let mut starve_levels = Vec::new();
        let mut reach_levels = Vec::new();
        let mut k = 0u32;
        loop {
            let epre_w = self.epre(&w);
            let mut next_w = w.clone();
            let mut starve = Vec::new();
            let mut reach = Vec::new();
            for goal in &sys_goals {
                let (y, x_levels) = self.starve_goal(goal, &epre_w, &env_goals);
                for s in 0..n {
                    next_w[s] |= y[s];
                }
                starve.push(y);
                reach.push(x_levels);
            }
            for s in 0..n {
                if next_w[s] && level[s] == UNRANKED {
                    level[s] = k;
                }
            }
            starve_levels.push(starve);
            reach_levels.push(reach);
            if next_w == w {
                return EnvSolution { winning: w, level, starve: starve_levels, reach: reach_levels };
            }
            w = next_w;
            k += 1;
        }
    }

    /// νY. ⋀_i μX. epre W ∨ (J^e_i ∧ ¬J^s ∧ epre Y) ∨ (¬J^s ∧ epre X)
    fn starve_goal(
        &self,
        goal: &[bool],
        epre_w: &[bool],
        env_goals: &[Vec<bool>],
    ) -> (Vec<bool>, Vec<Vec<u32>>) {
        let n = self.n_states();
        let mut y = vec![true; n];
        loop {
            let epre_y = self.epre(&y);
            let mut next_y = vec![true; n];
            let mut levels = Vec::new();
            for env_goal in env_goals {
                let mut x = vec![false; n];
                let mut lvl = vec![UNRANKED; n];
                let mut l = 0u32;
                loop {
                    let epre_x = self.epre(&x);
                    let next_x: Vec<bool> = (0..n)
                        .map(|s| {
                            epre_w[s] || (!goal[s] && ((env_goal[s] && epre_y[s]) || epre_x[s]))
                        })
                        .collect();
                    for s in 0..n {
                        if next_x[s] && lvl[s] == UNRANKED {
                            lvl[s] = l;
                        }
                    }
                    if next_x == x {
                        break;
                    }
                    x = next_x;
                    l += 1;
                }
                for s in 0..n {
                    next_y[s] &= x[s];
                }
                levels.push(lvl);
            }
            if next_y == y {
                return (y, levels);
            }
            y = next_y;
        }
    }
}
