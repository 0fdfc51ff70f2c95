use varp_arena::{render_frame, AtomicCommand, ExecOutcome, Frame, TaskSpec, TaskStatus, WorldState};

/// What the agent may touch: frames out, commands in, and the task status.
pub trait Environment {
    fn frame(&self) -> Frame;
    fn execute(&mut self, cmd: AtomicCommand) -> ExecOutcome;
    fn status(&self) -> TaskStatus;
    fn task(&self) -> &TaskSpec;
    fn seed(&self) -> u64;
    fn tick(&self) -> u64;
}

pub struct ArenaEnv {
    world: WorldState,
}

impl ArenaEnv {
    pub fn new(task_id: u8, seed: u64) -> crate::error::Result<Self> {
        Ok(Self { world: varp_arena::new_world(task_id, seed)? })
    }

    pub fn from_world(world: WorldState) -> Self {
        Self { world }
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn into_world(self) -> WorldState {
        self.world
    }
}

impl Environment for ArenaEnv {
    fn frame(&self) -> Frame {
        render_frame(&self.world)
    }

    fn execute(&mut self, cmd: AtomicCommand) -> ExecOutcome {
        self.world.execute_atomic(cmd)
    }

    fn status(&self) -> TaskStatus {
        self.world.status()
    }

    fn task(&self) -> &TaskSpec {
        &self.world.task
    }

    fn seed(&self) -> u64 {
        self.world.seed
    }

    fn tick(&self) -> u64 {
        self.world.tick
    }
}
