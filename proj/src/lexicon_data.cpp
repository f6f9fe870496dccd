// Default lexicons for blonde_lite, newline-separated, one item per line.
// Keys are "<lang>.<list>"; a config-supplied directory of
// <lang>.<list>.txt files overrides any of these.

#include <string>
#include <utility>
#include <vector>

namespace ch2ch::detail {

const std::vector<std::pair<std::string, std::string>>& default_lexicon_data() {
  static const std::vector<std::pair<std::string, std::string>> data = {
      {"en.pronoun", R"(i
me
my
mine
myself
we
us
our
ours
ourselves
you
your
yours
yourself
yourselves
he
him
his
himself
she
her
hers
herself
it
its
itself
they
them
their
theirs
themselves)"},

      {"en.discourse_marker", R"(however
therefore
moreover
meanwhile
nevertheless
nonetheless
furthermore
instead
otherwise
then
thus
hence
besides
anyway
finally
eventually
afterwards
afterward
suddenly
still
yet
though
although
because
since
while
whereas
but
and
or
so
on the other hand
in addition
as a result
for example
for instance
in fact
of course
at last
in the end
after all
at first
by the way
in contrast
even though
even so
as well)"},

      // Irregular past forms and past participles double as past-tense
      // markers; zero-change verbs (put, cut, set...) are undetectable and
      // deliberately absent.
      {"en.tense_past", R"(was
were
been
had
did
done
went
gone
said
told
saw
seen
came
become
became
got
gotten
took
taken
gave
given
knew
known
thought
found
felt
left
kept
began
begun
held
stood
heard
let
meant
met
ran
paid
sat
spoke
spoken
lay
lain
led
grew
grown
lost
fell
fallen
sent
built
understood
drew
drawn
broke
broken
spent
caught
drove
driven
bought
wore
worn
chose
chosen
wrote
written
rose
risen
slept
threw
thrown
flew
flown
forgot
forgotten
ate
eaten
drank
drunk
sang
sung
swam
swum
brought
taught
fought
sought
hung
struck
stuck
shone
shot
sold
shook
shaken
won
wept
swept
crept
knelt
dreamt
leant
learnt
burnt
smelt
spelt
bent
lent
dealt
stole
stolen
spun
swore
sworn
tore
torn
woke
woken
blew
blown
rode
ridden
hid
hidden
bore
borne
beat
beaten
bit
bitten
bled
bred
clung
dug
fed
fled
froze
frozen
lit
rang
rung
sank
sunk
slid
sped
sprang
sprung
stank
stunk
strode
strove
swung
wound)"},

      {"en.tense_present", R"(is
am
are
has
have
do
does)"},

      // Words ending in -ed that are not past forms.
      {"en.tense_ed_stop", R"(need
indeed
hundred
hundreds
sacred
naked
wicked
rugged
ragged
crooked
hatred
kindred
seed
feed
deed
weed
reed
speed
steed
greed
breed
creed
bleed
exceed
proceed
succeed)"},

      // Words ending in -s that the third-person heuristic must skip
      // (pronouns are excluded separately via en.pronoun).
      {"en.tense_s_stop", R"(this
thus
plus
minus
less
unless
perhaps
always
sometimes
besides
anyways
whereas
series
species
news
bus
gas
yes
alas
atlas
canvas
chaos
crisis
basis
analysis
physics
politics
mathematics
economics
ethics
across
towards
upstairs
downstairs
outdoors
indoors)"},

      // Common words whose sentence-initial capital says nothing; also
      // dropped as single-token entities anywhere ("I", "The").
      {"en.entity_stop", R"(the
a
an
and
but
or
so
then
when
where
while
after
before
if
as
at
by
for
from
in
into
of
on
to
with
he
she
it
they
we
you
i
his
her
its
their
our
my
your
this
that
these
those
there
here
not
no
yes
oh
well
now
once
upon
said
chapter
what
who
how
why
all
some
one
two
is
was
were
are
am
do
did
does
had
has
have
may
might
must
can
could
would
should
will
shall)"},

      {"zh.pronoun", R"(我们
你们
您们
他们
她们
它们
咱们
自己
我
你
您
他
她
它)"},

      {"zh.discourse_marker", R"(事实上
实际上
但是
然而
不过
可是
因此
所以
于是
然后
接着
同时
而且
并且
此外
另外
例如
比如
总之
最后
终于
突然
忽然
虽然
尽管
因为
由于
如果
要是
即使
无论
否则
不然
况且
何况
反而
甚至
毕竟
当然
其实
首先
其次
再次
最终
但)"},

      // Aspect/tense particles and auxiliaries.
      {"zh.tense", R"(正在
已经
曾经
即将
将要
快要
了
过
着
将
会
要
在)"},
  };
  return data;
}

}  // namespace ch2ch::detail
