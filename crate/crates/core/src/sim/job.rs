use std::cmp::Ordering;

/// Handle to a live job inside a [`JobTable`]. Handles are recycled after
/// completion, so they must not outlive the job they name. The stable
/// identity of a job is [`Job::id`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot(u32);

impl Slot {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Queued,
    InService(usize),
    /// Handed to the shared processor-sharing server.
    MigratedToPs,
    Completed,
}

#[derive(Debug, Clone)]
pub struct Job {
    /// Arrival index; lower ids win every tie.
    pub id: u64,
    pub arrival_time: f64,
    pub original_size: f64,
    pub remaining: f64,
    pub attained: f64,
    pub stage: Stage,
}

/// Slab of live jobs.
#[derive(Debug, Default, Clone)]
pub struct JobTable {
    jobs: Vec<Job>,
    free: Vec<u32>,
    live: usize,
}

impl JobTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, job: Job) -> Slot {
        self.live += 1;
        match self.free.pop() {
            Some(i) => {
                self.jobs[i as usize] = job;
                Slot(i)
            }
            None => {
                self.jobs.push(job);
                Slot((self.jobs.len() - 1) as u32)
            }
        }
    }

    pub fn remove(&mut self, slot: Slot) {
        self.jobs[slot.index()].stage = Stage::Completed;
        self.free.push(slot.0);
        self.live -= 1;
    }

    pub fn live(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    pub fn is_live(&self, slot: Slot) -> bool {
        self.jobs
            .get(slot.index())
            .is_some_and(|j| j.stage != Stage::Completed)
    }

    pub fn iter_live(&self) -> impl Iterator<Item = (Slot, &Job)> + '_ {
        self.jobs
            .iter()
            .enumerate()
            .filter(|(_, j)| j.stage != Stage::Completed)
            .map(|(i, j)| (Slot(i as u32), j))
    }

    /// Sum of remaining work over live jobs.
    pub fn remaining_work(&self) -> f64 {
        self.iter_live().map(|(_, j)| j.remaining).sum()
    }
}

impl std::ops::Index<Slot> for JobTable {
    type Output = Job;
    fn index(&self, slot: Slot) -> &Job {
        &self.jobs[slot.index()]
    }
}

impl std::ops::IndexMut<Slot> for JobTable {
    fn index_mut(&mut self, slot: Slot) -> &mut Job {
        &mut self.jobs[slot.index()]
    }
}

/// Total order on `(size, id)`: smaller size first, lower id on ties.
#[derive(Debug, Clone, Copy)]
pub struct RankKey {
    pub size: f64,
    pub id: u64,
    pub slot: Slot,
}

impl RankKey {
    pub fn remaining(jobs: &JobTable, slot: Slot) -> Self {
        let j = &jobs[slot];
        Self { size: j.remaining, id: j.id, slot }
    }

    pub fn original(jobs: &JobTable, slot: Slot) -> Self {
        let j = &jobs[slot];
        Self { size: j.original_size, id: j.id, slot }
    }

    /// Orders largest size first, lower id still winning ties.
    pub fn largest_first(jobs: &JobTable, slot: Slot) -> Self {
        let j = &jobs[slot];
        Self { size: -j.original_size, id: j.id, slot }
    }
}

impl PartialEq for RankKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for RankKey {}

impl PartialOrd for RankKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RankKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size
            .total_cmp(&other.size)
            .then(self.id.cmp(&other.id))
            .then(self.slot.cmp(&other.slot))
    }
}
