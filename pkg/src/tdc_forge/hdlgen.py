"""Structural VHDL-93 text for a converter configuration.

The instance inventory is read off the simulator netlists, so the emitted
topology and the simulated one cannot drift apart.  Output is a pure function
of the request: no timestamps, fixed ordering (line-major, then tap).
"""

import json
import os
import re
from dataclasses import dataclass, field

from .config import config_to_dict
from .dtdc import TdcConfig
from .errors import InvalidIdentifier
from .fine import build_fine_tdc_netlist
from .tpg import build_tpg_netlist

FILES = ("top.vhd", "tpg.vhd", "fine_tdc.vhd", "primitives.vhd", "manifest.json")

_IDENT = re.compile(r"^[A-Za-z](?:_?[A-Za-z0-9])*$")
VHDL_RESERVED = frozenset(
    """abs access after alias all and architecture array assert attribute begin block body buffer bus case
    component configuration constant disconnect downto else elsif end entity exit file for function generate
    generic group guarded if impure in inertial inout is label library linkage literal loop map mod nand new
    next nor not null of on open or others out package port postponed procedure process pure range record
    register reject rem report return rol ror select severity signal shared sla sll sra srl subtype then to
    transport type unaffected units until use variable wait when while with xnor xor""".split()
)

_TPG_KINDS = ("dff", "not", "nor", "xor")


@dataclass(frozen=True)
class CodegenRequest:
    cfg: TdcConfig = field(default_factory=TdcConfig)
    top_name: str = "dtdc_top"
    format: str = "vhdl-structural"

    def __post_init__(self):
        check_identifier(self.top_name)
        if self.top_name.lower() in {"tpg", "fine_tdc"} or self.top_name.lower().startswith("tdc_"):
            raise InvalidIdentifier(f"top_name {self.top_name!r} collides with a generated entity")
        if self.format != "vhdl-structural":
            raise ValueError(f"unsupported format {self.format!r}")


def check_identifier(name: str) -> str:
    if not isinstance(name, str) or not _IDENT.match(name) or name.lower() in VHDL_RESERVED:
        raise InvalidIdentifier(f"{name!r} is not a valid VHDL basic identifier")
    return name


def manifest(req: CodegenRequest) -> dict:
    cfg = req.cfg
    fine = build_fine_tdc_netlist(cfg.fine, cfg.t_clk).counts()
    tpg = build_tpg_netlist(cfg.t_clk).counts()
    taps = cfg.fine.taps_per_line
    return {
        "format": req.format,
        "top_name": req.top_name,
        "files": list(FILES),
        "config": config_to_dict(cfg),
        # per fine TDC; the top instantiates two
        "buffers": fine.get("buffer", 0),
        "counters": fine.get("counter", 0),
        "adders": fine.get("adder", 0),
        "adders_per_line": taps - 1,
        "mux": fine.get("mux", 0),
        "fine_tdc_instances": 2,
        "coarse_counters": 1,
        "alu": 1,
        "tpg": {k: tpg.get(k, 0) for k in _TPG_KINDS},
        "widths": {
            "counter": cfg.fine.counter_width,
            "adder": cfg.fine.adder_width,
            "coarse": cfg.coarse_width,
            "alu": cfg.alu_width,
        },
        "scale_k": cfg.scale_k,
        "lines": cfg.fine.n_lines,
        "taps_per_line": taps,
        "buffer_delays_fs": [list(row) for row in cfg.fine.buffer_delays],
    }


_HEADER = "-- Generated by tdc_forge. Structural topology only; buffer delays are behavioural.\n"

PRIMITIVES = _HEADER + """\
library ieee;
use ieee.std_logic_1164.all;
use ieee.numeric_std.all;

entity tdc_buf is
  generic (DELAY : time := 62500 fs);
  port (a : in std_logic; y : out std_logic);
end entity tdc_buf;

architecture behav of tdc_buf is
begin
  y <= transport a after DELAY;
end architecture behav;

library ieee;
use ieee.std_logic_1164.all;

entity tdc_inv is
  port (a : in std_logic; y : out std_logic);
end entity tdc_inv;

architecture rtl of tdc_inv is
begin
  y <= not a;
end architecture rtl;

library ieee;
use ieee.std_logic_1164.all;

entity tdc_nor2 is
  port (a0, a1 : in std_logic; y : out std_logic);
end entity tdc_nor2;

architecture rtl of tdc_nor2 is
begin
  y <= a0 nor a1;
end architecture rtl;

library ieee;
use ieee.std_logic_1164.all;

entity tdc_xor2 is
  port (a0, a1 : in std_logic; y : out std_logic);
end entity tdc_xor2;

architecture rtl of tdc_xor2 is
begin
  y <= a0 xor a1;
end architecture rtl;

library ieee;
use ieee.std_logic_1164.all;

entity tdc_dff is
  port (clk, rst, d : in std_logic; q : out std_logic);
end entity tdc_dff;

architecture rtl of tdc_dff is
begin
  process (clk, rst)
  begin
    if rst = '1' then
      q <= '0';
    elsif rising_edge(clk) then
      q <= d;
    end if;
  end process;
end architecture rtl;

library ieee;
use ieee.std_logic_1164.all;
use ieee.numeric_std.all;

entity tdc_counter is
  generic (WIDTH : positive := 35);
  port (
    clk, rst, en, gate : in std_logic;
    q   : out std_logic_vector(WIDTH - 1 downto 0);
    ovf : out std_logic
  );
end entity tdc_counter;

architecture rtl of tdc_counter is
  signal value : unsigned(WIDTH - 1 downto 0);
  signal sat   : std_logic;
begin
  process (clk, rst)
  begin
    if rst = '1' then
      value <= (others => '0');
      sat   <= '0';
    elsif rising_edge(clk) then
      if en = '1' and gate = '1' then
        if value = (value'range => '1') then
          sat <= '1';
        else
          value <= value + 1;
        end if;
      end if;
    end if;
  end process;
  q   <= std_logic_vector(value);
  ovf <= sat;
end architecture rtl;

library ieee;
use ieee.std_logic_1164.all;
use ieee.numeric_std.all;

entity tdc_adder is
  generic (WIDTH : positive := 35);
  port (
    a, b : in std_logic_vector(WIDTH - 1 downto 0);
    s    : out std_logic_vector(WIDTH - 1 downto 0);
    cout : out std_logic
  );
end entity tdc_adder;

architecture rtl of tdc_adder is
  signal full : unsigned(WIDTH downto 0);
begin
  full <= resize(unsigned(a), WIDTH + 1) + resize(unsigned(b), WIDTH + 1);
  s    <= std_logic_vector(full(WIDTH - 1 downto 0));
  cout <= full(WIDTH);
end architecture rtl;

library ieee;
use ieee.std_logic_1164.all;
use ieee.numeric_std.all;

entity tdc_mux is
  generic (N_IN : positive := 4; WIDTH : positive := 35);
  port (
    d   : in std_logic_vector(N_IN * WIDTH - 1 downto 0);
    sel : in natural range 0 to N_IN - 1;
    y   : out std_logic_vector(WIDTH - 1 downto 0)
  );
end entity tdc_mux;

architecture rtl of tdc_mux is
begin
  y <= d((sel + 1) * WIDTH - 1 downto sel * WIDTH);
end architecture rtl;

library ieee;
use ieee.std_logic_1164.all;
use ieee.numeric_std.all;

-- d_out = SCALE_K * n_c + n_f1 - n_f2, two's complement
entity tdc_alu is
  generic (WIDTH : positive := 35; SCALE_K : positive := 80);
  port (
    n_c, n_f1, n_f2 : in std_logic_vector(WIDTH - 1 downto 0);
    d_out : out std_logic_vector(WIDTH - 1 downto 0);
    ovf   : out std_logic
  );
end entity tdc_alu;

architecture rtl of tdc_alu is
  signal product : unsigned(2 * WIDTH - 1 downto 0);
  signal sum     : signed(WIDTH + 1 downto 0);
begin
  product <= unsigned(n_c) * to_unsigned(SCALE_K, WIDTH);
  sum <= signed(resize(product(WIDTH - 1 downto 0), WIDTH + 2))
       + signed(resize(unsigned(n_f1), WIDTH + 2))
       - signed(resize(unsigned(n_f2), WIDTH + 2));
  d_out <= std_logic_vector(sum(WIDTH - 1 downto 0));
  ovf <= '1' when product(2 * WIDTH - 1 downto WIDTH) /= 0
              or sum(WIDTH + 1) /= sum(WIDTH - 1)
              or sum(WIDTH) /= sum(WIDTH - 1)
         else '0';
end architecture rtl;
"""


def _tpg_vhd() -> str:
    return _HEADER + """\
library ieee;
use ieee.std_logic_1164.all;

entity tpg is
  port (
    clk, rst, start, stop : in std_logic;
    tf1, tf2, tc : out std_logic
  );
end entity tpg;

architecture structural of tpg is
  signal start_s1, start_s2, stop_s1, stop_s2 : std_logic;
  signal start_n, stop_n : std_logic;
begin
  u_ff_start1 : entity work.tdc_dff port map (clk => clk, rst => rst, d => start, q => start_s1);
  u_ff_start2 : entity work.tdc_dff port map (clk => clk, rst => rst, d => start_s1, q => start_s2);
  u_ff_stop1 : entity work.tdc_dff port map (clk => clk, rst => rst, d => stop, q => stop_s1);
  u_ff_stop2 : entity work.tdc_dff port map (clk => clk, rst => rst, d => stop_s1, q => stop_s2);
  u_inv_start : entity work.tdc_inv port map (a => start, y => start_n);
  u_inv_stop : entity work.tdc_inv port map (a => stop, y => stop_n);
  u_nor_tf1 : entity work.tdc_nor2 port map (a0 => start_n, a1 => start_s2, y => tf1);
  u_nor_tf2 : entity work.tdc_nor2 port map (a0 => stop_n, a1 => stop_s2, y => tf2);
  u_xor_tc : entity work.tdc_xor2 port map (a0 => start_s1, a1 => stop_s1, y => tc);
end architecture structural;
"""


def _fine_vhd(cfg: TdcConfig) -> str:
    f = cfg.fine
    n, taps = f.n_lines, f.taps_per_line
    cw, aw = f.counter_width, f.adder_width
    lines = [_HEADER, "library ieee;\nuse ieee.std_logic_1164.all;\nuse ieee.numeric_std.all;\n\n"]
    lines.append("entity fine_tdc is\n")
    lines.append(f"  generic (N_LINES : positive := {n}; TAPS : positive := {taps}; "
                 f"COUNTER_WIDTH : positive := {cw}; ADDER_WIDTH : positive := {aw});\n")
    lines.append("  port (\n    clk, rst, en, pulse_in, readout : in std_logic;\n"
                 "    code_out : out std_logic_vector(ADDER_WIDTH - 1 downto 0);\n"
                 "    done, ovf : out std_logic\n  );\nend entity fine_tdc;\n\n")
    lines.append("architecture structural of fine_tdc is\n")
    for l in range(n):
        taps_sig = ", ".join(f"tap_{l}_{k}" for k in range(taps))
        lines.append(f"  signal {taps_sig} : std_logic;\n")
    for l in range(n):
        for k in range(taps):
            lines.append(f"  signal cnt_{l}_{k} : std_logic_vector(ADDER_WIDTH - 1 downto 0);\n")
        for j in range(taps - 1):
            lines.append(f"  signal sum_{l}_{j} : std_logic_vector(ADDER_WIDTH - 1 downto 0);\n")
    lines.append(f"  signal cnt_ovf : std_logic_vector({n * taps - 1} downto 0);\n")
    if taps > 1:
        lines.append(f"  signal add_cy : std_logic_vector({n * (taps - 1) - 1} downto 0);\n")
    lines.append("  signal line_bus : std_logic_vector(N_LINES * ADDER_WIDTH - 1 downto 0);\n")
    lines.append("  signal mux_y : std_logic_vector(ADDER_WIDTH - 1 downto 0);\n")
    lines.append("  signal sel : natural range 0 to N_LINES - 1;\n")
    lines.append("  signal acc : unsigned(ADDER_WIDTH downto 0);\n")
    lines.append("  signal finished : std_logic;\nbegin\n")
    for l, row in enumerate(f.buffer_delays):
        lines.append(f"  -- delay line {l}\n")
        for k, d in enumerate(row):
            src = "pulse_in" if k == 0 else f"tap_{l}_{k - 1}"
            lines.append(f"  u_buf_{l}_{k} : entity work.tdc_buf generic map (DELAY => {d} fs) "
                         f"port map (a => {src}, y => tap_{l}_{k});\n")
    for l in range(n):
        lines.append(f"  -- counter array {l}\n")
        for k in range(taps):
            idx = l * taps + k
            lines.append(f"  u_counter_{l}_{k} : entity work.tdc_counter generic map (WIDTH => COUNTER_WIDTH) "
                         f"port map (clk => clk, rst => rst, en => en, gate => tap_{l}_{k}, "
                         f"q => cnt_{l}_{k}(COUNTER_WIDTH - 1 downto 0), ovf => cnt_ovf({idx}));\n")
            if cw < aw:
                lines.append(f"  cnt_{l}_{k}(ADDER_WIDTH - 1 downto COUNTER_WIDTH) <= (others => '0');\n")
    for l in range(n):
        lines.append(f"  -- adder chain {l}\n")
        acc = f"cnt_{l}_0"
        for j in range(taps - 1):
            idx = l * (taps - 1) + j
            lines.append(f"  u_adder_{l}_{j} : entity work.tdc_adder generic map (WIDTH => ADDER_WIDTH) "
                         f"port map (a => {acc}, b => cnt_{l}_{j + 1}, s => sum_{l}_{j}, cout => add_cy({idx}));\n")
            acc = f"sum_{l}_{j}"
        lines.append(f"  line_bus({l + 1} * ADDER_WIDTH - 1 downto {l} * ADDER_WIDTH) <= {acc};\n")
    lines.append("  u_mux : entity work.tdc_mux generic map (N_IN => N_LINES, WIDTH => ADDER_WIDTH) "
                 "port map (d => line_bus, sel => sel, y => mux_y);\n\n")
    lines.append("""\
  -- readout sequencer: step the mux over every line and accumulate
  process (clk, rst)
  begin
    if rst = '1' then
      sel <= 0;
      acc <= (others => '0');
      finished <= '0';
    elsif rising_edge(clk) then
      if readout = '1' and finished = '0' then
        acc <= acc + resize(unsigned(mux_y), ADDER_WIDTH + 1);
        if sel = N_LINES - 1 then
          finished <= '1';
        else
          sel <= sel + 1;
        end if;
      end if;
    end if;
  end process;
  code_out <= std_logic_vector(acc(ADDER_WIDTH - 1 downto 0));
  done <= finished;
""")
    ovf_terms = ["cnt_ovf /= (cnt_ovf'range => '0')", "acc(ADDER_WIDTH) = '1'"]
    if taps > 1:
        ovf_terms.insert(1, "add_cy /= (add_cy'range => '0')")
    lines.append("  ovf <= '1' when " + "\n      or ".join(ovf_terms) + " else '0';\n")
    lines.append("end architecture structural;\n")
    return "".join(lines)


def _top_vhd(req: CodegenRequest) -> str:
    cfg = req.cfg
    f = cfg.fine
    name = req.top_name
    aw = cfg.alu_width
    return _HEADER + f"""\
library ieee;
use ieee.std_logic_1164.all;
use ieee.numeric_std.all;

entity {name} is
  generic (SCALE_K : positive := {cfg.scale_k}; WIDTH : positive := {aw}; COARSE_WIDTH : positive := {cfg.coarse_width});
  port (
    clk, rst, start, stop, readout : in std_logic;
    d_out : out std_logic_vector(WIDTH - 1 downto 0);
    done, ovf : out std_logic
  );
end entity {name};

architecture structural of {name} is
  signal tf1, tf2, tc, en : std_logic;
  signal n_c, n_f1, n_f2 : std_logic_vector(WIDTH - 1 downto 0);
  signal done1, done2, ovf1, ovf2, ovf_c, ovf_alu : std_logic;
begin
  en <= '1';
  u_tpg : entity work.tpg port map (clk => clk, rst => rst, start => start, stop => stop, tf1 => tf1, tf2 => tf2, tc => tc);
  u_fine1 : entity work.fine_tdc
    generic map (N_LINES => {f.n_lines}, TAPS => {f.taps_per_line}, COUNTER_WIDTH => {f.counter_width}, ADDER_WIDTH => {f.adder_width})
    port map (clk => clk, rst => rst, en => en, pulse_in => tf1, readout => readout, code_out => n_f1, done => done1, ovf => ovf1);
  u_fine2 : entity work.fine_tdc
    generic map (N_LINES => {f.n_lines}, TAPS => {f.taps_per_line}, COUNTER_WIDTH => {f.counter_width}, ADDER_WIDTH => {f.adder_width})
    port map (clk => clk, rst => rst, en => en, pulse_in => tf2, readout => readout, code_out => n_f2, done => done2, ovf => ovf2);
  u_coarse : entity work.tdc_counter generic map (WIDTH => COARSE_WIDTH)
    port map (clk => clk, rst => rst, en => en, gate => tc, q => n_c(COARSE_WIDTH - 1 downto 0), ovf => ovf_c);
{_coarse_pad(cfg)}  u_alu : entity work.tdc_alu generic map (WIDTH => WIDTH, SCALE_K => SCALE_K)
    port map (n_c => n_c, n_f1 => n_f1, n_f2 => n_f2, d_out => d_out, ovf => ovf_alu);
  done <= done1 and done2;
  ovf <= ovf1 or ovf2 or ovf_c or ovf_alu;
end architecture structural;
"""


def _coarse_pad(cfg: TdcConfig) -> str:
    if cfg.coarse_width < cfg.alu_width:
        return "  n_c(WIDTH - 1 downto COARSE_WIDTH) <= (others => '0');\n"
    return ""


def emit(req: CodegenRequest) -> dict[str, str]:
    """Generated files keyed by name, in `FILES` order."""
    if req.cfg.coarse_width > req.cfg.alu_width or req.cfg.fine.counter_width > req.cfg.fine.adder_width:
        raise ValueError("generated datapath needs counter/coarse widths <= adder/ALU width")
    files = {
        "top.vhd": _top_vhd(req),
        "tpg.vhd": _tpg_vhd(),
        "fine_tdc.vhd": _fine_vhd(req.cfg),
        "primitives.vhd": PRIMITIVES,
        "manifest.json": json.dumps(manifest(req), indent=2, sort_keys=True) + "\n",
    }
    return {k: files[k] for k in FILES}


def write_files(files: dict[str, str], out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        paths.append(path)
    return paths
