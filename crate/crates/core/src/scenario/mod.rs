//! Scripted pose sequences: key postures, a builder for activity scripts,
//! the fall / non-fall scenario pack and long daily-activity scripts.

mod body;
mod daily;
mod pack;
mod script;

pub use body::{
    bend_posture, crouch_posture, lerp_posture, lie_bed_posture, sit_posture, smoothstep, stand_posture, standing_pose,
    BodyShape, Placement, Posture,
};
pub use daily::{daily_activity, render_daily, CameraBlock, DailyParams, DailyScript};
pub use pack::{default_camera, scenario_by_name, scenario_pack, Scenario, FALL_SCENARIOS, NON_FALL_SCENARIOS};
pub use script::{ActivitySpan, FallKind, ScriptBuilder, ScriptedFall, FLOOR_CLEARANCE};
